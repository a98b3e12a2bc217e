"""Exception hierarchy shared across the toolkit.

Every error raised by this package derives from EnclawedError so callers can
catch the whole family; CLI exit codes are mapped per class in cli.py.
"""

from __future__ import annotations


class EnclawedError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(EnclawedError):
    """Bad flavor, policy file, or environment configuration (exit code 2)."""


class FipsGateError(EnclawedError):
    """FIPS mode required but the crypto backend probe reports non-approved (exit code 3)."""


class AdmissionFatalError(EnclawedError):
    """Trust-root or module-admission failure that aborts an enclaved boot (exit code 4)."""


class BootstrapError(EnclawedError):
    """Bootstrap invariant violated (double boot, missing prerequisite)."""


class CanonicalizationError(EnclawedError):
    """Value cannot be canonically encoded (non-finite number, cycle, bad type)."""


class AuditAppendError(EnclawedError):
    """Audit record could not be flushed; the in-memory tail was not advanced."""


class SchemeValidationError(EnclawedError):
    """Classification scheme document violates an invariant.

    `code` is one of: missing-id, empty-levels, negative-rank, bad-rank-type,
    non-contiguous-ranks, duplicate-name, non-string-name, bad-document.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class SchemeLoadError(EnclawedError):
    """Scheme file could not be read or parsed; message carries the file path."""


class PathTraversalError(EnclawedError):
    """A file path escaped the vetted configuration directory allowlist."""


class LabelRangeError(EnclawedError):
    """Rank outside the active scheme's range."""


class LabelValidationError(EnclawedError):
    """Compartment or releasability token not permitted by the scheme."""


class LabelParseError(EnclawedError):
    """Label text does not parse under the active scheme."""


class NormalizationError(EnclawedError):
    """URL could not be normalized into an egress target."""


class NarrowingError(EnclawedError):
    """Per-extension egress narrowing attempted without declared hosts."""


class GuardFrozenError(EnclawedError):
    """Runtime mutation of a frozen guard (enclaved flavor) was refused."""


class ManifestError(EnclawedError):
    """Module or skill manifest is structurally invalid."""


class SigningError(EnclawedError):
    """Signing failed (bad key material)."""


class TrustRootError(EnclawedError):
    """Trust root document is invalid."""


class TrustRootLockedError(EnclawedError):
    """setTrustRoot/resetTrustRoot after lockTrustRoot."""


class DlpInputError(EnclawedError):
    """Scanner input was absent or not text."""


class DlpOversizeError(EnclawedError):
    """Input exceeded the scan byte cap with onOversize='throw'."""


class KeyDerivationError(EnclawedError):
    """scrypt parameters rejected (ceiling exceeded or malformed)."""


class DecryptError(EnclawedError):
    """Envelope failed authentication; no plaintext is released."""


class BufferConfigError(EnclawedError):
    """Transaction buffer misconfigured (nonpositive ramPercent)."""


class RecordTooLargeError(EnclawedError):
    """Single transaction record exceeds the whole buffer capacity."""


class SessionStateError(EnclawedError):
    """Illegal session state transition; names the from/to states."""

    def __init__(self, from_state: str, to_state: str):
        super().__init__(f"illegal transition {from_state} -> {to_state}")
        self.from_state = from_state
        self.to_state = to_state


class RegistrationError(EnclawedError):
    """Duplicate agent id or registration against a stopped controller."""


class AgentStoppedError(EnclawedError):
    """Cooperative cancellation: the session was stopped."""


class ApprovalDeniedError(EnclawedError):
    """A human denied the proposed action."""


class ResolutionError(EnclawedError):
    """Approval id unknown, already resolved, or voided."""


class RefinementError(EnclawedError):
    """Envelope capability outside the manifest's declared set (or unknown)."""


class BmcBoundError(EnclawedError):
    """State space at the requested bound exceeds the trace ceiling; reduce K."""
