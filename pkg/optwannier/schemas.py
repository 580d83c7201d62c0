from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Dict, List, Literal, Optional

SCHEMA_VERSION = "1"

EMIT_CHOICES = ('bands', 'sheet', 'connection', 'hodge', 'coeffs', 'wannier', 'report')


# Model file schemas
class HoppingTermDocument(BaseModel):
    m1: int
    m2: int
    re: List[List[float]]
    im: Optional[List[List[float]]] = None

    @field_validator('re', 'im')
    @classmethod
    def validate_square(cls, v):
        if v is None:
            return v
        size = len(v)
        if size == 0 or any(len(row) != size for row in v):
            raise ValueError('hopping blocks must be non-empty square matrices')
        return v


class ModelDocument(BaseModel):
    name: Optional[str] = None
    a1: List[float]
    a2: List[float]
    dim: int = Field(gt=0)
    band: int = Field(ge=0)
    gap_tol: Optional[float] = Field(default=None, gt=0)
    terms: List[HoppingTermDocument]
    orbital_offsets: Optional[List[List[float]]] = None

    @field_validator('a1', 'a2')
    @classmethod
    def validate_vector(cls, v):
        if len(v) != 2:
            raise ValueError('lattice vectors must have exactly two components')
        return v

    @model_validator(mode='after')
    def validate_dimensions(self):
        if self.band >= self.dim:
            raise ValueError(f'band index {self.band} out of range for dim {self.dim}')
        if not self.terms:
            raise ValueError('at least one hopping term is required')
        for term in self.terms:
            if len(term.re) != self.dim or (term.im is not None and len(term.im) != self.dim):
                raise ValueError(f'hopping block at ({term.m1}, {term.m2}) is not {self.dim}x{self.dim}')
        if self.orbital_offsets is not None and (len(self.orbital_offsets) != self.dim
                                                 or any(len(p) != 2 for p in self.orbital_offsets)):
            raise ValueError(f'orbital_offsets must list one (x, y) pair per orbital ({self.dim})')
        return self


class ModelSummary(BaseModel):
    name: str
    dim: int
    band: int
    time_reversal: bool
    terms: int


# Run configuration
class RunConfig(BaseModel):
    model: str = 'square3'
    document: Optional[ModelDocument] = None
    band: Optional[int] = None
    n: int = 100
    method: Literal['ode', 'twist', 'alt'] = 'ode'
    optimize: bool = True
    richardson: bool = True
    rayleigh: bool = True
    output: Optional[str] = None
    emit: List[str] = Field(default_factory=lambda: ['report'])
    threads: Optional[int] = None
    orbital_sigma: float = Field(default=0.3, gt=0)
    window: int = Field(default=8, ge=0)
    resolution: int = Field(default=12, gt=0)
    initial_phase: float = 0.0
    gap_tol: Optional[float] = Field(default=None, gt=0)
    orbital_offsets: Optional[List[List[float]]] = None

    @field_validator('n')
    @classmethod
    def validate_grid(cls, v):
        if v < 8 or v % 2:
            raise ValueError('grid size must be an even integer >= 8')
        return v

    @field_validator('emit')
    @classmethod
    def validate_emit(cls, v):
        unknown = sorted(set(v) - set(EMIT_CHOICES))
        if unknown:
            raise ValueError(f'unknown emit targets: {", ".join(unknown)}')
        return v

    @field_validator('orbital_offsets')
    @classmethod
    def validate_offsets(cls, v):
        if v is not None and (not v or any(len(p) != 2 for p in v)):
            raise ValueError('orbital_offsets must be a non-empty list of (x, y) pairs')
        return v

    @field_validator('threads')
    @classmethod
    def validate_threads(cls, v):
        if v is not None and v < 1:
            raise ValueError('threads must be positive')
        return v

    @model_validator(mode='after')
    def validate_method(self):
        if self.method == 'alt' and not self.optimize:
            raise ValueError('method "alt" always produces the optimal gauge; drop --no-optimize')
        return self


# Reports
class RunReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    model: str
    method: str
    n: int
    band: int
    time_reversal: bool
    chern: int
    chern_residual: float
    obstructed: bool = False
    center: Optional[List[float]] = None
    variance_pre: Optional[float] = None
    variance_post: Optional[float] = None
    e_evec: Optional[float] = None
    e_div: Optional[float] = None
    e_residual: Optional[float] = None
    max_imag: Optional[float] = None
    decay_rate: Optional[float] = None
    axis_decay: Optional[List[Optional[float]]] = None
    window_mass: Optional[float] = None
    harmonic: Optional[List[float]] = None
    min_gap: Optional[float] = None
    timings: Dict[str, float] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)


class ComparisonReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    model: str
    n: int
    chern: int
    e_para: float
    e_para_refined: Optional[float] = None
    e_para_ratio: Optional[float] = None
    variance_ode: Optional[float] = None
    variance_twist: Optional[float] = None
    variance_delta: Optional[float] = None
    variance_alt: Optional[float] = None
    alt_projector_distance: Optional[float] = None
    alt_center_offset: Optional[List[float]] = None
    timings: Dict[str, float] = Field(default_factory=dict)
