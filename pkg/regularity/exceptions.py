from funcspace.exceptions import MintauError


class RegularityPreconditionError(MintauError):
    pass
