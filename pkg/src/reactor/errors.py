"""Exception hierarchy shared by every reactor component."""


class ReactorError(Exception):
    """Base class for all errors raised by the engine."""


class ConfigError(ReactorError):
    """A configuration, task or scenario document is invalid."""


class RegistryError(ReactorError):
    """Base class for tool registry errors."""


class DuplicateToolError(RegistryError):
    """A tool with the same name is already registered."""

    def __init__(self, name: str):
        super().__init__(f"Tool '{name}' is already registered")
        self.name = name


class ToolNotFoundError(RegistryError):
    """No tool with the given name exists in the registry."""

    def __init__(self, name: str):
        super().__init__(f"Tool '{name}' is not registered")
        self.name = name


class DescriptorValidationError(RegistryError):
    """A tool descriptor failed field validation."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"Invalid descriptor field '{field}': {reason}")
        self.field = field
        self.reason = reason


class ToolUnavailableError(RegistryError):
    """The tool is removed, quarantined or above the cost ceiling."""

    def __init__(self, name: str, status: str):
        super().__init__(f"Tool '{name}' is unavailable ({status})")
        self.name = name
        self.status = status


class CapacityExhaustedError(RegistryError):
    """The tool's lease queue is full."""

    def __init__(self, name: str, queue_limit: int):
        super().__init__(f"Tool '{name}' is at capacity and its queue of {queue_limit} is full")
        self.name = name
        self.queue_limit = queue_limit


class PrivacyViolationError(ReactorError):
    """A dispatch would release more data than the minimal-context rules allow."""

    def __init__(self, rule: str, message: str):
        super().__init__(f"Privacy rule '{rule}' violated: {message}")
        self.rule = rule


class BackendError(ReactorError):
    """The planner backend could not produce a completion."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ScriptExhaustedError(BackendError):
    """The scripted backend was called more times than it has steps."""


class ScriptDivergenceError(BackendError):
    """The prompt does not contain the substring the current script step expects."""

    def __init__(self, expected: str, prompt: str):
        super().__init__(f"Prompt does not contain expected substring {expected!r}")
        self.expected = expected
        self.prompt = prompt


class ContextOverflowError(ReactorError):
    """The prompt cannot fit the context budget even after maximal compaction."""


class SessionNotFoundError(ReactorError):
    """No session or persisted trace exists for the given id."""

    def __init__(self, session_id: str):
        super().__init__(f"Session '{session_id}' not found")
        self.session_id = session_id


class ServiceBusyError(ReactorError):
    """The engine is already running the maximum number of sessions."""


class ToolInvocationError(ReactorError):
    """A tool endpoint could not be invoked or answered outside the wire protocol."""

    def __init__(self, message: str, unavailable: bool = False):
        super().__init__(message)
        self.unavailable = unavailable
