from funcspace.exceptions import MintauError


class ConfigurationError(MintauError):
    """A problem config that does not parse or is inconsistent."""
    pass
