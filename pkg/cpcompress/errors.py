""" Exceptions raised by cpcompress.

Checks that produce a verdict (well-formedness, effectiveness,
equivalence) report violations as data; these exceptions are reserved
for inputs that cannot be processed at all.
"""


class CompressError(Exception):
    """ Base class for every error raised by this package. """


class ParseError(CompressError):
    """ A network document could not be parsed or validated. """

    def __init__(self, line, reason: str):
        self.line = line
        self.reason = reason
        where = f'line {line}: ' if line is not None else ''
        super().__init__(f'{where}{reason}')


class DanglingReference(CompressError):
    """ A document refers to a node, policy or ACL that isn't defined. """

    def __init__(self, id: str, kind: str = 'id'):
        self.id = id
        self.kind = kind
        super().__init__(f'undefined {kind} {id!r}')


class UnsupportedSize(CompressError):
    """ A topology generator can't produce a network of this size. """


class InstanceTooLarge(CompressError):
    """ An exhaustive search was asked to run on too many nodes. """

    def __init__(self, size: int, bound: int):
        self.size = size
        self.bound = bound
        super().__init__(f'{size} nodes exceeds the bound of {bound}')


class Divergence(CompressError):
    """ Fixed-point iteration did not settle within its round bound. """

    def __init__(self, bound: int, factor: int):
        self.bound = bound
        self.factor = factor
        super().__init__(
            f'no stable labeling within {bound} rounds (divergence factor {factor})')


class UnmappedNode(CompressError):
    """ An AS path mentions a node the node map doesn't cover. """

    def __init__(self, node: str):
        self.node = node
        super().__init__(f'node {node!r} has no abstract image')


class LayoutMiss(CompressError):
    """ A policy mentions a community or lp value absent from the layout. """

    def __init__(self, symbol):
        self.symbol = symbol
        super().__init__(f'{symbol!r} is not in the variable layout')


class LayoutMismatch(CompressError):
    """ Two relations from different managers or layouts were compared. """


class CertificateMissing(CompressError):
    """ An abstract network was built without passing certificates. """
