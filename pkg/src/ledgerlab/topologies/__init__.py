from .base import (
    ABSENT,
    MECHANISMS,
    UNDECRYPTABLE,
    BothCommitted,
    GroupDescriptor,
    LedgerScope,
    Lookup,
    Platform,
    SecondRejected,
    Support,
)
from .channelized import Channelized
from .p2p import NotaryRejection, PointToPoint
from .public_anchor import PublicAnchor, TxManager

TOPOLOGIES = {
    "channelized": Channelized,
    "p2p": PointToPoint,
    "public-anchor": PublicAnchor,
}


def make_platform(kind: str, config=None, **options) -> Platform:
    from ..netsim import SimConfig
    try:
        cls = TOPOLOGIES[kind]
    except KeyError:
        raise ValueError("unknown topology %r (choose from %s)" % (kind, ", ".join(TOPOLOGIES))) from None
    return cls(config or SimConfig(), **options)
