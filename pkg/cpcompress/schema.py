""" pydantic models for the `bonsai-net/1` JSON documents.

These only describe the wire format; `cpcompress.network` converts a
validated document into the immutable domain types and resolves its
references.
"""

from typing import Literal, Optional
import ipaddress
import re
from pydantic import BaseModel, ConfigDict, Field, field_validator
from cpcompress.protocols import AbstractionKind, Protocol

SCHEMA_VERSION = 'bonsai-net/1'

COMMUNITY_PATTERN = re.compile(r'^\d+:\d+$')


def _check_prefix(value: str) -> str:
    if '/' not in value:
        raise ValueError(f'prefix {value!r} has no length')
    # strict: host bits must be zero
    ipaddress.IPv4Network(value, strict=True)
    return value


def _check_community(value: str) -> str:
    if not COMMUNITY_PATTERN.match(value):
        raise ValueError(f'community {value!r} is not of the form N:M')
    return value


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid')


class NodeModel(_Strict):
    id: str = Field(min_length=1)
    asn: int = Field(ge=0, lt=2**32)
    protocols: list[Protocol] = [Protocol.BGP]


class InterfaceModel(_Strict):
    import_policy: Optional[str] = None
    export_policy: Optional[str] = None
    acl: Optional[str] = None


class EdgeModel(_Strict):
    endpoints: tuple[str, str]
    ospf_cost: int = Field(1, ge=1)
    ospf_area: int = Field(0, ge=0)
    # Keyed by the endpoint that owns the interface:
    interfaces: dict[str, InterfaceModel] = {}


class MatchModel(_Strict):
    prefixes: list[str] = []
    communities: list[str] = []
    protocols: list[Protocol] = []

    @field_validator('prefixes')
    @classmethod
    def _prefixes(cls, values):
        return [_check_prefix(value) for value in values]

    @field_validator('communities')
    @classmethod
    def _communities(cls, values):
        return [_check_community(value) for value in values]


class ClauseModel(_Strict):
    match: MatchModel = MatchModel()
    action: Literal['permit', 'deny']
    add_communities: list[str] = []
    delete_communities: list[str] = []
    set_local_pref: Optional[int] = Field(None, ge=0, lt=2**32)

    @field_validator('add_communities', 'delete_communities')
    @classmethod
    def _communities(cls, values):
        return [_check_community(value) for value in values]


class PolicyModel(_Strict):
    clauses: list[ClauseModel] = []


class AclEntryModel(_Strict):
    prefix: str
    action: Literal['permit', 'deny']

    @field_validator('prefix')
    @classmethod
    def _prefix(cls, value):
        return _check_prefix(value)


class AclModel(_Strict):
    entries: list[AclEntryModel] = []


class StaticRouteModel(_Strict):
    prefix: str
    next_hop: str

    @field_validator('prefix')
    @classmethod
    def _prefix(cls, value):
        return _check_prefix(value)


class NetworkModel(_Strict):
    version: Literal['bonsai-net/1']
    nodes: list[NodeModel]
    edges: list[EdgeModel] = []
    policies: dict[str, PolicyModel] = {}
    acls: dict[str, AclModel] = {}
    static_routes: dict[str, list[StaticRouteModel]] = {}
    origins: dict[str, list[str]] = {}

    @field_validator('origins')
    @classmethod
    def _origins(cls, values):
        return {
            node: [_check_prefix(prefix) for prefix in prefixes]
            for node, prefixes in values.items()}


class AttrAbstractionModel(_Strict):
    kind: AbstractionKind
    unused_tags: list[str] = []


class MappingModel(_Strict):
    """ The sidecar relating a compressed network to its source. """
    abstract_nodes: list[str]
    f: dict[str, str]
    h: AttrAbstractionModel
    # Split abstract nodes: coarse id -> ids of its copies.
    copies: dict[str, list[str]] = {}
