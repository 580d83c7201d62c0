"""Batch driver: model selection, the six-step construction, and method comparison."""
import logging
import os
import time
from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import numpy as np

from config import Config
from optwannier.errors import InvalidConfig, UnknownModel, WannierError
from optwannier.models import BlochCoefficients, ConnectionField, HodgeParts, SheetAssignment
from optwannier.schemas import ComparisonReport, RunConfig, RunReport
from optwannier.services import spectral
from optwannier.services.curvature import alt_assignment, berry_curvature_grid
from optwannier.services.gauge import (apply_divergence_free_gauge, berry_connection_grid, divergence_residual,
                                       hodge_parts, optimize_gauge, wannier_moments)
from optwannier.services.hamiltonian import (BUILTIN_MODELS, TightBindingModel, band_energies, builtin_model,
                                             check_band_gap, check_time_reversal, model_from_document,
                                             parse_model_file, with_band, with_gap_tol, with_orbital_offsets)
from optwannier.services.transport import (TransportSettings, eigen_residual, parallel_error, projector_distance,
                                           projector_error, stage1_edge, stage2_gauge_apply, stage2_sheet,
                                           twist_transport, unwrap_phase)
from optwannier.services.wannier import (axis_decay_rates, bloch_fourier_coefficients, wannier_result,
                                         window_mass)

logger = logging.getLogger(__name__)


@contextmanager
def _stage(label: str, timings: Dict[str, float]) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    except WannierError as e:
        raise e.with_context(stage=label)
    finally:
        timings[label] = timings.get(label, 0.0) + time.perf_counter() - start


class TransportMethod(ABC):
    """Produces the Stage-2 sheet: periodic when the Chern number vanishes, raw otherwise."""

    @abstractmethod
    def build_sheet(self, model: TightBindingModel, n: int, settings: TransportSettings,
                    timings: Dict[str, float]) -> SheetAssignment:
        pass

    @abstractmethod
    def get_name(self) -> str:
        pass


class OdeTransport(TransportMethod):
    def build_sheet(self, model, n, settings, timings):
        with _stage('step2', timings):
            edge = stage1_edge(model, n, settings)
        with _stage('step3', timings):
            raw = stage2_sheet(model, edge, settings)
            if raw.chern != 0:
                return raw
            return stage2_gauge_apply(raw, unwrap_phase(raw.z))

    def get_name(self) -> str:
        return "ode"


class TwistTransport(TransportMethod):
    def build_sheet(self, model, n, settings, timings):
        with _stage('twist', timings):
            return twist_transport(model, n, settings)

    def get_name(self) -> str:
        return "twist"


def get_transport_method(name: str) -> TransportMethod:
    """Factory function to get the transport method by name"""
    if name.lower() == 'ode':
        return OdeTransport()
    elif name.lower() == 'twist':
        return TwistTransport()
    raise InvalidConfig(f"unknown transport method '{name}'")


def load_model(cfg: RunConfig) -> TightBindingModel:
    """Resolve the model of a run: inline document, built-in name, or model file path.

    The gap tolerance comes from the run, then the model document, then ``Config.GAP_TOL``.
    """
    if cfg.document is not None:
        model = model_from_document(cfg.document, Config.GAP_TOL)
    elif cfg.model in BUILTIN_MODELS:
        model = with_gap_tol(builtin_model(cfg.model), Config.GAP_TOL)
    elif os.path.isfile(cfg.model):
        with open(cfg.model, encoding='utf-8') as fh:
            model = parse_model_file(fh.read(), Config.GAP_TOL)
    else:
        raise UnknownModel(f"'{cfg.model}' is neither a built-in model nor a model file")
    if cfg.gap_tol is not None:
        model = with_gap_tol(model, cfg.gap_tol)
    if cfg.orbital_offsets is not None:
        model = with_orbital_offsets(model, cfg.orbital_offsets)
    if cfg.band is not None and cfg.band != model.band:
        model = with_band(model, cfg.band)
    return model


def transport_settings(cfg: RunConfig) -> TransportSettings:
    return TransportSettings(richardson=cfg.richardson, rayleigh=cfg.rayleigh,
                             threads=cfg.threads or Config.THREADS, initial_phase=cfg.initial_phase,
                             winding_tol=Config.WINDING_TOL)


@dataclass(eq=False)
class PipelineRun:
    """Everything a run produced; the report plus the fields behind it."""
    config: RunConfig
    model: TightBindingModel
    report: RunReport
    bands: np.ndarray
    sheet: Optional[SheetAssignment] = None
    connection: Optional[ConnectionField] = None
    hodge: Optional[HodgeParts] = None
    coeffs: Optional[BlochCoefficients] = None
    extras: Dict[str, object] = field(default_factory=dict)


def _base_report(cfg: RunConfig, model: TightBindingModel, trs: bool, min_gap: float) -> Dict[str, object]:
    return {'model': model.name if cfg.document is not None or cfg.model in BUILTIN_MODELS else cfg.model,
            'method': cfg.method, 'n': cfg.n, 'band': model.band, 'time_reversal': trs,
            'min_gap': min_gap}


def _obstructed(cfg, model, base, sheet, timings, bands) -> PipelineRun:
    coeffs = bloch_fourier_coefficients(sheet)
    slopes = axis_decay_rates(coeffs)
    logger.warning("stopping after step 3: Chern number %d, axis decay slopes %s", sheet.chern, slopes)
    report = RunReport(**base, chern=sheet.chern, chern_residual=sheet.chern_residual, obstructed=True,
                       axis_decay=list(slopes), timings=timings)
    return PipelineRun(config=cfg, model=model, report=report, bands=bands, sheet=sheet, coeffs=coeffs)


def execute(cfg: RunConfig, model: Optional[TightBindingModel] = None) -> PipelineRun:
    """Run Steps 1-6 (or the twist/alt variants) and keep the intermediate fields."""
    timings: Dict[str, float] = {}
    settings = transport_settings(cfg)
    spectral.set_workers(settings.threads)
    model = model or load_model(cfg)
    trs = check_time_reversal(model)
    logger.info("model %s: dim=%d band=%d trs=%s n=%d method=%s", model.name, model.dim, model.band, trs,
                cfg.n, cfg.method)

    with _stage('step1', timings):
        bands, min_gap = band_energies(model, cfg.n)
        if min_gap <= model.gap_tol:
            check_band_gap(model, cfg.n)
    base = _base_report(cfg, model, trs, min_gap)

    if cfg.method == 'alt':
        return _execute_alt(cfg, model, settings, base, bands, timings)

    method = get_transport_method(cfg.method)
    sheet = method.build_sheet(model, cfg.n, settings, timings)
    logger.info("chern=%d residual=%.3e", sheet.chern, sheet.chern_residual)
    if sheet.chern != 0:
        return _obstructed(cfg, model, base, sheet, timings, bands)

    lat = model.lat
    pre = wannier_moments(sheet, lat)
    e_evec = projector_error(model, sheet)
    connection = hodge = None
    final, post, e_div = sheet, None, None
    if cfg.optimize:
        with _stage('step4', timings):
            connection = berry_connection_grid(sheet, lat)
            hodge = hodge_parts(connection, lat, Config.SOLVABILITY_TOL)
        with _stage('step5', timings):
            final = apply_divergence_free_gauge(sheet, hodge.psi)
            e_div = divergence_residual(final, lat, Config.SOLVABILITY_TOL)
            post = wannier_moments(final, lat)
        logger.info("variance %.9f -> %.9f, E_div=%.3e", pre.variance, post.variance, e_div)
    with _stage('step6', timings):
        result = wannier_result(final, lat, post or pre)
        mass = window_mass(result.coeffs, min(cfg.window, cfg.n // 2))

    report = RunReport(**base, chern=sheet.chern, chern_residual=sheet.chern_residual,
                       center=list(result.center), variance_pre=pre.variance,
                       variance_post=post.variance if post else None, e_evec=e_evec, e_div=e_div,
                       e_residual=eigen_residual(model, final), max_imag=result.max_imag,
                       decay_rate=None if np.isnan(result.decay_rate) else result.decay_rate,
                       window_mass=mass, timings=timings)
    logger.info("center=(%.6f, %.6f) variance=%.9f max_imag=%.3e", result.center[0], result.center[1],
                result.variance, result.max_imag)
    return PipelineRun(config=cfg, model=model, report=report, bands=bands, sheet=final,
                       connection=connection, hodge=hodge, coeffs=result.coeffs)


def _execute_alt(cfg, model, settings, base, bands, timings) -> PipelineRun:
    with _stage('alt', timings):
        curv = berry_curvature_grid(model, cfg.n)
    chern = int(np.rint(curv.c1_integral))
    if chern != 0:
        logger.warning("curvature integrates to Chern number %d; transporting without the connection", chern)
        sheet = OdeTransport().build_sheet(model, cfg.n, settings, timings)
        return _obstructed(cfg, model, base, sheet, timings, bands)

    with _stage('alt', timings):
        alt = alt_assignment(model, cfg.n, settings, Config.SOLVABILITY_TOL, curvature=curv)
    with _stage('step6', timings):
        e_div = divergence_residual(alt.sheet, model.lat, Config.SOLVABILITY_TOL)
        result = wannier_result(alt.sheet, model.lat, alt.moments)
        mass = window_mass(result.coeffs, min(cfg.window, cfg.n // 2))
    report = RunReport(**base, chern=0, chern_residual=alt.sheet.chern_residual,
                       center=list(result.center), variance_post=alt.moments.variance,
                       e_evec=projector_error(model, alt.sheet), e_div=e_div,
                       e_residual=eigen_residual(model, alt.sheet), max_imag=result.max_imag,
                       decay_rate=None if np.isnan(result.decay_rate) else result.decay_rate,
                       window_mass=mass, harmonic=[alt.h1, alt.h2], timings=timings)
    return PipelineRun(config=cfg, model=model, report=report, bands=bands, sheet=alt.sheet,
                       coeffs=result.coeffs, extras={'curvature': curv, 'path_error': alt.path_error,
                                                     'harmonic_spread': alt.harmonic_spread})


def run_pipeline(cfg: RunConfig, model: Optional[TightBindingModel] = None) -> RunReport:
    """Execute a run and write the requested outputs when ``cfg.output`` is set."""
    run = execute(cfg, model)
    if cfg.output:
        from optwannier.services.export import write_outputs
        write_outputs(run, cfg.output)
    return run.report


def lattice_offset(model: TightBindingModel, a: List[float], b: List[float]) -> List[float]:
    """Difference of two centers in lattice coordinates (integers when they differ by a lattice vector)."""
    delta = np.asarray(a) - np.asarray(b)
    return [float(delta @ model.lat.b1 / (2 * np.pi)), float(delta @ model.lat.b2 / (2 * np.pi))]


def compare_methods(cfg: RunConfig, refine: bool = False,
                    model: Optional[TightBindingModel] = None) -> ComparisonReport:
    """E_para between ODE and twist transport, plus variance and alt-path cross-checks."""
    timings: Dict[str, float] = {}
    settings = transport_settings(cfg)
    spectral.set_workers(settings.threads)
    model = model or load_model(cfg)
    lat = model.lat

    ode = OdeTransport().build_sheet(model, cfg.n, settings, timings)
    twist = TwistTransport().build_sheet(model, cfg.n, settings, timings)
    fields = {'model': model.name, 'n': cfg.n, 'chern': ode.chern, 'e_para': parallel_error(ode, twist)}

    if refine:
        fine = OdeTransport().build_sheet(model, 2 * cfg.n, settings, timings)
        fine_twist = TwistTransport().build_sheet(model, 2 * cfg.n, settings, timings)
        fields['e_para_refined'] = parallel_error(fine, fine_twist)
        if fields['e_para_refined'] > 0:
            fields['e_para_ratio'] = fields['e_para'] / fields['e_para_refined']

    if ode.chern == 0:
        ode_opt = optimize_gauge(ode, lat, Config.SOLVABILITY_TOL)
        ode_moments = wannier_moments(ode_opt, lat)
        fields['variance_ode'] = ode_moments.variance
        fields['variance_twist'] = wannier_moments(optimize_gauge(twist, lat, Config.SOLVABILITY_TOL),
                                                   lat).variance
        fields['variance_delta'] = fields['variance_twist'] - fields['variance_ode']
        with _stage('alt', timings):
            alt = alt_assignment(model, cfg.n, settings, Config.SOLVABILITY_TOL)
        fields['variance_alt'] = alt.moments.variance
        fields['alt_projector_distance'] = projector_distance(alt.sheet, ode_opt)
        fields['alt_center_offset'] = lattice_offset(model, list(alt.moments.center), list(ode_moments.center))

    report = ComparisonReport(**fields, timings=timings)
    logger.info("compare %s n=%d: E_para=%.3e", model.name, cfg.n, report.e_para)
    return report
