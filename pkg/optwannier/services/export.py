"""CSV, PNG and JSON writers for pipeline runs."""
import logging
import os
from typing import List, Sequence

import numpy as np
from PIL import Image

from optwannier.errors import WannierError
from optwannier.services.lattice import TorusGrid
from optwannier.services.wannier import wannier_samples

logger = logging.getLogger(__name__)


def write_csv(path: str, columns: Sequence[str], rows: np.ndarray) -> str:
    np.savetxt(path, np.atleast_2d(rows), fmt='%.17g', delimiter=',', header=','.join(columns), comments='')
    return path


def _grid_columns(n: int) -> np.ndarray:
    """(j1, j2, κ1, κ2) for every stored node, rows in grid order."""
    j = TorusGrid(n).indices
    j1, j2 = np.meshgrid(j, j, indexing='ij')
    return np.column_stack([j1.ravel(), j2.ravel(), j1.ravel() / n, j2.ravel() / n])


def _complex_columns(values: np.ndarray, prefix: str = '') -> tuple:
    flat = values.reshape(-1, values.shape[-1])
    names, cols = [], []
    for i in range(flat.shape[1]):
        names += [f'{prefix}re_{i}', f'{prefix}im_{i}']
        cols += [flat[:, i].real, flat[:, i].imag]
    return names, np.column_stack(cols)


def emit_bands(run, out: str) -> str:
    n = run.config.n
    e = run.bands.reshape(n * n, -1)
    names = ['j1', 'j2', 'kappa1', 'kappa2'] + [f'e_{i}' for i in range(e.shape[1])]
    return write_csv(os.path.join(out, 'bands.csv'), names, np.column_stack([_grid_columns(n), e]))


def emit_sheet(run, out: str) -> str:
    sheet = run.sheet
    names, cols = _complex_columns(sheet.vectors)
    rows = np.column_stack([_grid_columns(sheet.n), sheet.energies.ravel(), cols])
    return write_csv(os.path.join(out, 'sheet.csv'), ['j1', 'j2', 'kappa1', 'kappa2', 'energy'] + names, rows)


def emit_connection(run, out: str) -> str:
    c = run.connection
    rows = np.column_stack([_grid_columns(run.sheet.n), c.a1.ravel(), c.a2.ravel(), c.ax.ravel(), c.ay.ravel()])
    return write_csv(os.path.join(out, 'connection.csv'),
                     ['j1', 'j2', 'kappa1', 'kappa2', 'a1', 'a2', 'ax', 'ay'], rows)


def emit_hodge(run, out: str) -> str:
    h = run.hodge
    rows = np.column_stack([_grid_columns(run.sheet.n), h.psi.ravel(), h.f_pot.ravel(),
                            np.full(h.psi.size, h.hx), np.full(h.psi.size, h.hy)])
    return write_csv(os.path.join(out, 'hodge.csv'), ['j1', 'j2', 'kappa1', 'kappa2', 'psi', 'F', 'hx', 'hy'], rows)


def emit_coeffs(run, out: str) -> str:
    """One row per (m1, m2, i)."""
    data = run.coeffs.data
    m = run.coeffs.indices()
    m1, m2, i = np.meshgrid(m, m, np.arange(data.shape[-1]), indexing='ij')
    rows = np.column_stack([m1.ravel(), m2.ravel(), i.ravel(), data.real.ravel(), data.imag.ravel()])
    return write_csv(os.path.join(out, 'coeffs.csv'), ['m1', 'm2', 'i', 're', 'im'], rows)


def emit_wannier(run, out: str) -> List[str]:
    """Samples of W_0 on the real-space window, as CSV and as a grayscale |W_0| image."""
    cfg = run.config
    lat = run.model.lat
    window = min(cfg.window, cfg.n // 2)
    x, y, values = wannier_samples(run.coeffs, lat, cfg.orbital_sigma * lat.min_length,
                                   offsets=run.model.orbital_offsets, window=window, resolution=cfg.resolution)
    gx, gy = np.meshgrid(x, y, indexing='ij')
    csv_path = write_csv(os.path.join(out, 'wannier.csv'), ['x', 'y', 're', 'im', 'abs'],
                         np.column_stack([gx.ravel(), gy.ravel(), values.real.ravel(), values.imag.ravel(),
                                          np.abs(values).ravel()]))

    magnitude = np.abs(values)
    peak = magnitude.max()
    scaled = (255.0 * magnitude / peak) if peak > 0 else magnitude
    # rows of the image run along -y
    pixels = np.flipud(scaled.T).astype(np.uint8)
    png_path = os.path.join(out, 'wannier.png')
    Image.fromarray(pixels).save(png_path)
    return [csv_path, png_path]


def emit_report(run, out: str) -> str:
    path = os.path.join(out, 'report.json')
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(run.report.model_dump_json(indent=2))
    return path


EMITTERS = {
    'bands': emit_bands,
    'sheet': emit_sheet,
    'connection': emit_connection,
    'hodge': emit_hodge,
    'coeffs': emit_coeffs,
    'wannier': emit_wannier,
}


def write_outputs(run, out: str) -> List[str]:
    """Write every requested emission that the run produced; the report is written last."""
    os.makedirs(out, exist_ok=True)
    written: List[str] = []
    for target in run.config.emit:
        if target == 'report' or target not in EMITTERS:
            continue
        if target in ('connection', 'hodge') and getattr(run, target) is None:
            logger.info("skipping %s: not computed for this run", target)
            continue
        if target == 'wannier' and run.report.obstructed:
            logger.info("skipping wannier: the sheet is not periodic")
            continue
        try:
            result = EMITTERS[target](run, out)
        except WannierError as e:
            raise e.with_context(stage='emit')
        written += result if isinstance(result, list) else [result]
    names = [os.path.basename(p) for p in written]
    run.report.outputs = names + ['report.json'] if 'report' in run.config.emit else names
    if 'report' in run.config.emit:
        written.append(emit_report(run, out))
    logger.info("wrote %d files to %s", len(written), out)
    return written
