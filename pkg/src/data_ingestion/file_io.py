# src/data_ingestion/file_io.py
import json
import math
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.angular.half_int import HalfInt
from src.angular.rotations import Direction
from src.fock.correlations import CorrelationMatrix
from src.fock.states import LayerState, TwoModeState
from src.polarization.forward import MeasurementRecord
from src.reconstruction.directions import DirectionSet
from src.reconstruction.pipeline import ReconstructionDiagnostics
from src.utils.exceptions import InvalidInputError
from src.utils.integrity import atomic_write_json

logger = logging.getLogger(__name__)


def encode_matrix(matrix: np.ndarray) -> List[List[List[float]]]:
    """Complex matrix as nested [re, im] pairs"""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix, dtype=complex)]


def decode_matrix(payload: Any) -> np.ndarray:
    array = np.asarray(payload, dtype=float)
    if array.ndim != 3 or array.shape[2] != 2:
        raise InvalidInputError(f"Expected a matrix of [re, im] pairs, got shape {array.shape}")
    return array[..., 0] + 1j * array[..., 1]


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class ArtifactIO:
    """JSON codecs for state, measurement, direction and reconstruction files.

    Every file is an object carrying a "manifest" next to its payload.
    """

    def read_json(self, file_path: str) -> Dict[str, Any]:
        try:
            with open(file_path, 'r', encoding='utf-8') as handle:
                payload = json.load(handle)
        except json.JSONDecodeError as e:
            raise InvalidInputError(f"Corrupted JSON in {file_path}: line {e.lineno} column {e.colno}: {e.msg}")
        except OSError as e:
            raise InvalidInputError(f"Cannot read {file_path}: {e}")
        if not isinstance(payload, dict):
            raise InvalidInputError(f"{file_path} must hold a JSON object")
        return payload

    def _decode(self, file_path: str, kind: str, decoder):
        payload = self.read_json(file_path)
        try:
            return decoder(payload)
        except InvalidInputError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as e:
            logger.error(f"Malformed {kind} file {file_path}: {e!r}")
            raise InvalidInputError(f"Malformed {kind} file {file_path}: {e!r}")

    # States

    def state_payload(self, state: TwoModeState) -> Dict[str, Any]:
        return {
            'layers': [{'spin_x2': layer.spin.twice_value, 'weight': layer.weight,
                        'rho': encode_matrix(layer.rho)} for layer in state.layers],
            'coherences': [{'spin_x2': s1.twice_value, 'spin2_x2': s2.twice_value,
                            'block': encode_matrix(block)}
                           for (s1, s2), block in sorted(state.coherences.items(), key=lambda item: item[0])],
        }

    def state_from_payload(self, payload: Dict[str, Any]) -> TwoModeState:
        layers = tuple(LayerState(HalfInt.from_twice(entry['spin_x2']), float(entry['weight']),
                                  decode_matrix(entry['rho'])) for entry in payload['layers'])
        coherences = {(HalfInt.from_twice(entry['spin_x2']), HalfInt.from_twice(entry['spin2_x2'])):
                      decode_matrix(entry['block']) for entry in payload.get('coherences') or []}
        return TwoModeState(layers, coherences)

    def save_state(self, file_path: str, state: TwoModeState, manifest: Dict[str, Any]) -> str:
        return atomic_write_json(file_path, {'manifest': manifest, **self.state_payload(state)})

    def load_state(self, file_path: str) -> TwoModeState:
        return self._decode(file_path, 'state', self.state_from_payload)

    # Measurements

    def record_payload(self, record: MeasurementRecord) -> Dict[str, Any]:
        errors = record.std_errors if record.std_errors is not None else np.zeros(record.K.dimension)
        entry = {
            'K_x2': record.K.twice_value,
            'theta': record.direction.theta,
            'phi': record.direction.phi,
            'values': {str(q.twice_value): [float(v), float(e)]
                       for q, v, e in zip(record.K.projections(), record.values, errors)},
        }
        if record.psi is not None:
            entry['psi'] = float(record.psi)
        if record.shots is not None:
            entry['shots'] = int(record.shots)
        if record.order is not None:
            entry['L'] = int(record.order)
        if record.covariance is not None:
            entry['covariance'] = [[float(c) for c in row] for row in record.covariance]
        return entry

    def record_from_payload(self, entry: Dict[str, Any]) -> MeasurementRecord:
        K = HalfInt.from_twice(entry['K_x2'])
        values, errors = [], []
        for q in K.projections():
            value, error = entry['values'][str(q.twice_value)]
            values.append(float(value))
            errors.append(float(error))
        shots = entry.get('shots')
        return MeasurementRecord(
            K, Direction(float(entry['theta']), float(entry['phi'])), np.array(values),
            std_errors=np.array(errors) if shots is not None or any(errors) else None,
            shots=int(shots) if shots is not None else None,
            psi=float(entry['psi']) if entry.get('psi') is not None else None,
            order=int(entry['L']) if entry.get('L') is not None else None,
            covariance=np.array(entry['covariance'], dtype=float) if entry.get('covariance') is not None else None)

    def save_measurements(self, file_path: str, records: List[MeasurementRecord],
                          manifest: Dict[str, Any]) -> str:
        return atomic_write_json(file_path, {'manifest': manifest,
                                             'records': [self.record_payload(r) for r in records]})

    def load_measurements(self, file_path: str) -> List[MeasurementRecord]:
        return self._decode(file_path, 'measurement',
                            lambda payload: [self.record_from_payload(e) for e in payload['records']])

    # Direction sets

    def directions_payload(self, dirs: DirectionSet) -> Dict[str, Any]:
        return {
            'L': dirs.L,
            'directions': [{'theta': d.theta, 'phi': d.phi} for d in dirs.directions],
            'min_angle_deg': dirs.min_angle_deg,
            'cond_P': _finite_or_none(dirs.cond_P),
            'cond_Y': _finite_or_none(dirs.cond_Y),
        }

    def save_directions(self, file_path: str, dirs: DirectionSet, manifest: Dict[str, Any]) -> str:
        return atomic_write_json(file_path, {'manifest': manifest, **self.directions_payload(dirs)})

    def load_directions(self, file_path: str) -> DirectionSet:
        return self._decode(file_path, 'directions', lambda payload: DirectionSet(
            int(payload['L']),
            tuple(Direction(float(d['theta']), float(d['phi'])) for d in payload['directions'])))

    # Reconstructions

    def diagnostics_payload(self, G: CorrelationMatrix, diagnostics: ReconstructionDiagnostics) -> Dict[str, Any]:
        entry = {
            'K_x2': G.K.twice_value,
            'mode': diagnostics.mode,
            'residual': diagnostics.residual,
            'cond_P': {str(L): _finite_or_none(c) for L, c in sorted(diagnostics.cond_P.items())},
            'psd_projected': diagnostics.psd_projected,
            'G': encode_matrix(G.entries),
            'n_records': diagnostics.n_records,
            'lambda': diagnostics.regularization,
        }
        if diagnostics.chi2 is not None:
            entry['chi2'] = diagnostics.chi2
            entry['dof'] = diagnostics.dof
            entry['cond_design'] = _finite_or_none(diagnostics.cond_design)
        if diagnostics.std_errors_real is not None:
            entry['std_errors'] = {'real': diagnostics.std_errors_real.tolist(),
                                   'imag': diagnostics.std_errors_imag.tolist()}
        return entry

    def save_reconstructions(self, file_path: str, entries: List[Dict[str, Any]],
                             manifest: Dict[str, Any]) -> str:
        ordered = sorted(entries, key=lambda entry: entry['K_x2'])
        return atomic_write_json(file_path, {'manifest': manifest, 'reconstructions': ordered})

    def load_reconstructions(self, file_path: str) -> List[Tuple[CorrelationMatrix, Dict[str, Any]]]:
        return self._decode(file_path, 'reconstruction', lambda payload: [
            (CorrelationMatrix(HalfInt.from_twice(entry['K_x2']), decode_matrix(entry['G'])), entry)
            for entry in payload['reconstructions']])
