"""Pydantic request/response models mirroring the JSON wire schemas."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field


class Matrix(BaseModel):
    model_config = ConfigDict(extra="forbid")
    rows: int = Field(gt=0)
    cols: int = Field(gt=0)
    data: list[tuple[float, float]]


class LeafNode(BaseModel):
    model_config = ConfigDict(extra="forbid")
    label: int


class TreeEdge(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kraus: list[Matrix]
    child: "TreeNode | LeafNode"


class TreeNode(BaseModel):
    model_config = ConfigDict(extra="forbid")
    party: int = Field(ge=0)
    edges: list[TreeEdge]


class Tree(BaseModel):
    model_config = ConfigDict(extra="forbid")
    version: Literal["locc-tree/1"]
    party_dims: list[int]
    root: Union[TreeNode, LeafNode]


class EnsembleMember(BaseModel):
    model_config = ConfigDict(extra="forbid")
    weight: float
    state: Matrix


class EnsembleModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    party_dims: list[int]
    members: list[EnsembleMember]


class ToleranceOverrides(BaseModel):
    model_config = ConfigDict(extra="forbid")
    completeness: Optional[float] = None
    equalize: Optional[float] = None
    rank: Optional[float] = None
    null: Optional[float] = None
    success_drift: Optional[float] = None


class ValidateRequest(BaseModel):
    tree: Tree
    tolerances: Optional[ToleranceOverrides] = None
    timing: bool = False


class EvaluateRequest(BaseModel):
    tree: Tree
    ensemble: EnsembleModel
    relabel: bool = False
    tolerances: Optional[ToleranceOverrides] = None
    timing: bool = False


class CompressM1Request(BaseModel):
    tree: Tree
    ensemble: EnsembleModel
    tolerances: Optional[ToleranceOverrides] = None
    timing: bool = False


class SlimRequest(BaseModel):
    tree: Tree
    cap: int = Field(default=10_000, ge=1)
    reduce_randomness: bool = False
    include_components: bool = False
    tolerances: Optional[ToleranceOverrides] = None
    timing: bool = False


class DemoRequest(BaseModel):
    name: Literal["bell", "product-basis", "random"]
    seed: int = 0
    rounds: int = Field(default=2, ge=1)
    dims: list[int] = Field(default_factory=lambda: [2, 2])
    tolerances: Optional[ToleranceOverrides] = None
    timing: bool = False


class RunReport(BaseModel):
    """Report payload; operation-specific fields ride along as extras."""

    model_config = ConfigDict(extra="allow")
    version: str
    operation: str
    input_digest: str
    status: str
    residuals: dict[str, float] = Field(default_factory=dict)
    bounds: dict[str, Union[int, float]] = Field(default_factory=dict)


class ValidateResponse(BaseModel):
    report: RunReport


class EvaluateResponse(BaseModel):
    report: RunReport


class CompressM1Response(BaseModel):
    report: RunReport
    tree: Tree


class SlimRecord(BaseModel):
    weight: float = Field(alias="lambda")
    tree: Tree
    model_config = ConfigDict(populate_by_name=True)


class SlimResponse(BaseModel):
    report: RunReport
    components: Optional[list[SlimRecord]] = None


class DemoResponse(BaseModel):
    report: RunReport
    tree: Tree
    ensemble: EnsembleModel
    compressed_tree: Tree


class Health(BaseModel):
    status: str
    version: str
