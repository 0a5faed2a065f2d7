# src/tomo_cli/commands.py
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config import Config
from src import __version__
from src.angular.half_int import HalfInt
from src.data_ingestion.file_io import ArtifactIO
from src.fock.correlations import correlation_matrix
from src.fock.states import (TwoModeState, fock_state, noon_state, pure_layer_state, random_layer_state,
                             single_layer, superposition_state)
from src.polarization.forward import MeasurementRecord, intensity_moments
from src.polarization.sampling import measure_direction, spawn_seeds
from src.reconstruction.directions import DirectionSet, design_directions
from src.reconstruction.pipeline import reconstruct_correlations
from src.reconstruction.schur import schur_multipoles
from src.utils.exceptions import InsufficientDataError, InvalidInputError, VerificationError
from src.utils.integrity import atomic_write, convention_fingerprint

logger = logging.getLogger(__name__)

FAMILIES = ('pure-layer', 'random', 'noon', 'fock', 'manual')
NOISELESS = 'noiseless'


@dataclass
class RunManifest:
    """Provenance embedded in every output file; no timestamps so reruns match byte for byte."""

    command: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    shots: Any = None
    K_x2: List[int] = field(default_factory=list)
    flags: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'inputs': self.inputs,
            'outputs': self.outputs,
            'seed': self.seed,
            'shots': self.shots,
            'K_x2': self.K_x2,
            'flags': self.flags,
            'version': __version__,
            'conventions': convention_fingerprint(),
        }


def parse_amplitudes(text: str) -> List[complex]:
    """'1,0' or '0.6,0.8j' -> complex amplitudes"""
    try:
        return [complex(token.strip().replace(' ', '')) for token in text.split(',') if token.strip()]
    except ValueError as e:
        raise InvalidInputError(f"Cannot parse amplitudes {text!r}: {e}")


def parse_shots(text) -> Optional[int]:
    """None for the noiseless literal, otherwise a count >= 1"""
    if text is None or str(text).strip().lower() == NOISELESS:
        return None
    try:
        shots = int(text)
    except ValueError:
        raise InvalidInputError(f"--shots takes an integer >= 1 or '{NOISELESS}', got {text!r}")
    if shots < 1:
        raise InvalidInputError(f"--shots must be >= 1 (or '{NOISELESS}'), got {shots}")
    return shots


def _build_state(family: str, spin: Optional[str], amps: Optional[str], rank: Optional[int], seed: int,
                 n: Optional[int], n_h: Optional[int], n_v: Optional[int],
                 components: Optional[Sequence[str]]) -> TwoModeState:
    if family == 'pure-layer':
        if spin is None or amps is None:
            raise InvalidInputError("pure-layer needs --spin and --amps")
        return single_layer(pure_layer_state(HalfInt.of(spin), parse_amplitudes(amps)))
    if family == 'random':
        if spin is None:
            raise InvalidInputError("random needs --spin")
        spin = HalfInt.of(spin)
        return single_layer(random_layer_state(spin, rank or spin.dimension, seed))
    if family == 'noon':
        if n is None:
            raise InvalidInputError("noon needs --n")
        return noon_state(n)
    if family == 'fock':
        if n_h is None or n_v is None:
            raise InvalidInputError("fock needs --nh and --nv")
        return fock_state(n_h, n_v)
    if family == 'manual':
        if not components:
            raise InvalidInputError("manual needs at least one --component S:amplitudes")
        parsed = {}
        for component in components:
            label, _, amplitudes = component.partition(':')
            if not amplitudes:
                raise InvalidInputError(f"Component {component!r} must look like 'S:a0,a1,...'")
            parsed[HalfInt.of(label)] = parse_amplitudes(amplitudes)
        return superposition_state(parsed)
    raise InvalidInputError(f"Unknown state family {family!r}; choose from {', '.join(FAMILIES)}")


def cmd_gen_state(family: str, out: str, spin: Optional[str] = None, amps: Optional[str] = None,
                  rank: Optional[int] = None, seed: int = 0, n: Optional[int] = None,
                  n_h: Optional[int] = None, n_v: Optional[int] = None,
                  components: Optional[Sequence[str]] = None) -> TwoModeState:
    """Build a state from a named recipe and write it as JSON"""
    state = _build_state(family, spin, amps, rank, seed, n, n_h, n_v, components)
    recipe = {'family': family, 'spin': spin, 'amps': amps, 'rank': rank, 'n': n,
              'nh': n_h, 'nv': n_v, 'components': list(components or [])}
    manifest = RunManifest('gen-state', outputs={'state': out}, seed=seed, flags=recipe)
    ArtifactIO().save_state(out, state, manifest.to_dict())
    logger.info(f"Wrote {family} state with {len(state.layers)} layer(s) to {out}")
    for layer in state.layers:
        print(f"S={layer.spin}: weight {layer.weight:.12g}")
    return state


def cmd_directions(L: int, out: str, seed: int = 0) -> DirectionSet:
    dirs = design_directions(L, seed)
    manifest = RunManifest('directions', outputs={'directions': out}, seed=seed, flags={'L': L})
    ArtifactIO().save_directions(out, dirs, manifest.to_dict())
    print(f"L={L}: {len(dirs.directions)} directions, min line angle {dirs.min_angle_deg:.6f} deg, "
          f"cond(P_{L})={dirs.cond_P:.6g}, cond(Y_{L})={dirs.cond_Y:.6g}")
    return dirs


def _simulate_task(state: TwoModeState, K: HalfInt, L: int, direction, shots: Optional[int],
                   seed: int) -> MeasurementRecord:
    if shots is None:
        return intensity_moments(state, K, direction.euler(0.0), order=L)
    return measure_direction(state, K, direction, shots, seed, order=L)


def cmd_simulate(state_file: str, direction_files: Sequence[str], K_values: Sequence[str], out: str,
                 shots=NOISELESS, seed: int = 0) -> List[MeasurementRecord]:
    """Measure every designed direction for each requested K"""
    io = ArtifactIO()
    shot_count = parse_shots(shots)
    state = io.load_state(state_file)
    sets: Dict[int, DirectionSet] = {}
    for path in direction_files:
        dirs = io.load_directions(path)
        sets[dirs.L] = dirs
    orders = sorted({HalfInt.of(K) for K in K_values})
    if not orders:
        raise InvalidInputError("simulate needs at least one --K")

    tasks = []
    for K in orders:
        missing = [L for L in range(K.twice_value + 1) if L not in sets]
        if missing:
            raise InsufficientDataError(f"Direction files do not cover K={K}", missing)
        for L in range(K.twice_value + 1):
            tasks.extend((K, L, direction) for direction in sets[L].directions)
    seeds = spawn_seeds(seed, len(tasks))

    with ThreadPoolExecutor(max_workers=Config.threads()) as executor:
        records = list(executor.map(lambda args: _simulate_task(state, *args[0], shot_count, args[1]),
                                    zip(tasks, seeds)))

    manifest = RunManifest('simulate', inputs={'state': state_file, 'directions': list(direction_files)},
                           outputs={'measurements': out}, seed=seed,
                           shots=NOISELESS if shot_count is None else shot_count,
                           K_x2=[K.twice_value for K in orders])
    io.save_measurements(out, records, manifest.to_dict())
    logger.info(f"Simulated {len(records)} records to {out}")
    print(f"Wrote {len(records)} records ({'noiseless' if shot_count is None else f'{shot_count} shots'}) to {out}")
    return records


def cmd_reconstruct(measurements_file: str, out: str, mode: str = 'exact', lam: Optional[float] = None,
                    psd_project: bool = False, K_values: Optional[Sequence[str]] = None,
                    truth_file: Optional[str] = None) -> List[Dict[str, Any]]:
    """Reconstruct G^K for every order present (or requested) in the measurements"""
    io = ArtifactIO()
    records = io.load_measurements(measurements_file)
    present = sorted({record.K for record in records})
    orders = sorted({HalfInt.of(K) for K in K_values}) if K_values else present
    truth = io.load_state(truth_file) if truth_file else None
    lam = Config.DEFAULT_LAMBDA if lam is None else lam

    def reconstruct(K: HalfInt):
        return reconstruct_correlations(records, K, mode, lam, psd_project)

    with ThreadPoolExecutor(max_workers=Config.threads()) as executor:
        results = list(executor.map(reconstruct, orders))

    entries = []
    for K, (G, diagnostics) in zip(orders, results):
        entries.append(io.diagnostics_payload(G, diagnostics))
        line = f"K={K}: mode={diagnostics.mode} residual={diagnostics.residual:.3e}"
        if diagnostics.cond_P:
            line += " cond(P)=" + ", ".join(f"L{L}:{c:.3g}" for L, c in sorted(diagnostics.cond_P.items()))
        if diagnostics.chi2 is not None:
            line += f" chi2={diagnostics.chi2:.4g} (dof {diagnostics.dof})"
        print(line)
        if diagnostics.std_errors_real is not None:
            for a, q1 in enumerate(K.projections()):
                for b, q2 in enumerate(K.projections()):
                    z = G.entries[a, b]
                    print(f"  G[{q1},{q2}] = {z.real:+.6f} +- {diagnostics.std_errors_real[a, b]:.2e}"
                          f" {z.imag:+.6f}i +- {diagnostics.std_errors_imag[a, b]:.2e}")
        if truth is not None:
            error = G.max_abs_difference(correlation_matrix(truth, K))
            print(f"  max |dG| = {error:.3e}")

    manifest = RunManifest('reconstruct', inputs={'measurements': measurements_file},
                           outputs={'reconstruction': out}, K_x2=[K.twice_value for K in orders],
                           flags={'mode': mode, 'lambda': lam, 'psd_project': psd_project})
    io.save_reconstructions(out, entries, manifest.to_dict())
    return entries


def cmd_verify(state_file: str, reconstruction_file: str, out: str,
               threshold: Optional[float] = None, K_values: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """Compare reconstructions with the ground-truth correlations of a state file"""
    io = ArtifactIO()
    threshold = Config.VERIFY_THRESHOLD if threshold is None else threshold
    state = io.load_state(state_file)
    reconstructions = {G.K: G for G, _ in io.load_reconstructions(reconstruction_file)}
    if K_values:
        wanted = sorted({HalfInt.of(K) for K in K_values})
        absent = [str(K) for K in wanted if K not in reconstructions]
        if absent:
            raise VerificationError(f"K={', '.join(absent)} not present in {reconstruction_file}")
        reconstructions = {K: reconstructions[K] for K in wanted}

    rows, worst = [], 0.0
    for K in sorted(reconstructions):
        G = reconstructions[K]
        truth = correlation_matrix(state, K)
        error = G.max_abs_difference(truth)
        worst = max(worst, error)
        for rec, ref in zip(schur_multipoles(G), schur_multipoles(truth)):
            rows.append({
                'K': str(K),
                'K_x2': K.twice_value,
                'L': rec.L,
                'multipole_norm': rec.norm(),
                'truth_norm': ref.norm(),
                'multipole_error': float(np.linalg.norm(rec.components - ref.components)),
                'max_abs_dG': error,
            })

    report = pd.DataFrame(rows, columns=['K', 'K_x2', 'L', 'multipole_norm', 'truth_norm',
                                         'multipole_error', 'max_abs_dG'])
    atomic_write(out, report.to_csv(index=False, float_format='%.12e'))
    for K in sorted(reconstructions):
        spectrum = report[report['K_x2'] == K.twice_value]
        norms = ', '.join(f"L{int(r.L)}={r.multipole_norm:.4g}" for r in spectrum.itertuples())
        print(f"K={K}: max |dG| = {spectrum['max_abs_dG'].iloc[0]:.3e}; spectrum {norms}")
    if worst > threshold:
        logger.error(f"Verification failed: max |dG| = {worst:.3e} > {threshold:.1e}")
        raise VerificationError(f"max |dG| = {worst:.3e} exceeds {threshold:.1e}")
    print(f"Verification passed: max |dG| = {worst:.3e} <= {threshold:.1e}")
    return report
