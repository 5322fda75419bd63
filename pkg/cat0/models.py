from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from cat0.errors import MalformedInput


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# Complex schemas
class EdgeIn(Strict):
    id: str
    ends: Annotated[List[str], Field(min_length=2, max_length=2)]
    length: Optional[Annotated[float, Field(gt=0)]] = None


class FaceIn(Strict):
    id: str
    edges: Annotated[List[str], Field(min_length=3, max_length=3)]


class RectIn(Strict):
    id: str
    edges: Annotated[List[str], Field(min_length=4, max_length=4)]
    width: Annotated[float, Field(gt=0)]
    height: Annotated[float, Field(gt=0)]


class TriangulatedComplexIn(Strict):
    kind: Literal["triangulated"] = "triangulated"
    vertices: List[str]
    edges: List[EdgeIn]
    faces: List[FaceIn]


class RectangularComplexIn(Strict):
    kind: Literal["rectangular"] = "rectangular"
    vertices: List[str]
    edges: List[EdgeIn]
    rects: List[RectIn]


class ConeIn(Strict):
    id: str
    rays: Annotated[List[str], Field(min_length=2, max_length=2)]
    angle: Annotated[float, Field(gt=0)]


class SingleVertexComplexIn(Strict):
    kind: Literal["single_vertex"] = "single_vertex"
    rays: List[str]
    cones: List[ConeIn]


ComplexIn = Annotated[
    Union[TriangulatedComplexIn, RectangularComplexIn, SingleVertexComplexIn],
    Field(discriminator="kind"),
]


# Point schemas
class FacePointIn(Strict):
    face: str
    x: float
    y: float


class EdgePointIn(Strict):
    edge: str
    t: Annotated[float, Field(ge=0)]


class VertexPointIn(Strict):
    vertex: str


class RayPointIn(Strict):
    ray: str
    radius: Annotated[float, Field(gt=0)]


class ConeAnglePointIn(Strict):
    cone: str
    angle_from_first: Annotated[float, Field(ge=0)]
    radius: Annotated[float, Field(gt=0)]


class OriginIn(Strict):
    origin: Literal[True]


PointIn = Union[FacePointIn, EdgePointIn, VertexPointIn, RayPointIn, ConeAnglePointIn, OriginIn]


# Tree schemas
class SplitLengthIn(Strict):
    split: str
    length: Annotated[float, Field(ge=0)]


class TreeIn(Strict):
    splits: Annotated[List[SplitLengthIn], Field(min_length=1, max_length=2)]


class FixtureOut(Strict):
    complex: ComplexIn
    points: Dict[str, PointIn] = {}
    queries: Dict[str, PointIn] = {}
    source: Optional[str] = None


# Result schemas
class ViolationOut(BaseModel):
    vertex: str
    kind: str
    length: Optional[float] = None
    cycle: List[str] = []
    detail: str = ""


class ValidationOut(BaseModel):
    ok: bool
    violations: List[ViolationOut]
    link_stats: Dict[str, Union[int, float, str]] = {}


class CrossingOut(BaseModel):
    ray: str
    x: Optional[float] = None
    x_min: Optional[float] = None
    x_max: Optional[float] = None


class CellOut(BaseModel):
    cone: str
    polygon: List[List[float]]


class LPStatsOut(BaseModel):
    vars: int
    rows: int
    pivots: int


class HullOut(BaseModel):
    origin_in_hull: bool
    crossings: List[CrossingOut]
    cells: List[CellOut]
    lp_stats: LPStatsOut


class GeodesicOut(BaseModel):
    length: float
    through_origin: bool
    crossings: List[CrossingOut] = []


class SpmSummaryOut(BaseModel):
    regions: int
    boundary_trees: int
    max_branches_per_tree: int


class FaceTypeOut(BaseModel):
    face: str
    type: str
    incoming: List[str]
    rays: List[List[List[float]]] = []


class LastStepOut(BaseModel):
    source: str
    edges: Dict[str, str]
    vertices: Dict[str, str]
    faces: List[FaceTypeOut]


class PathOut(BaseModel):
    length: float
    steps: List[str]


_complex_adapter = TypeAdapter(ComplexIn)
_point_adapter = TypeAdapter(PointIn)
_tree_adapter = TypeAdapter(TreeIn)
_fixture_adapter = TypeAdapter(FixtureOut)


def _parse(adapter, data, what):
    try:
        return adapter.validate_python(data)
    except ValidationError as e:
        raise MalformedInput(f"Invalid {what}: {e}") from e


def parse_complex(data) -> Union[TriangulatedComplexIn, RectangularComplexIn, SingleVertexComplexIn]:
    return _parse(_complex_adapter, data, "complex")


def parse_point(data):
    return _parse(_point_adapter, data, "point")


def parse_tree(data) -> TreeIn:
    return _parse(_tree_adapter, data, "tree")


def parse_fixture(data) -> FixtureOut:
    return _parse(_fixture_adapter, data, "fixture")
