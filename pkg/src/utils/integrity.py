import hashlib
import json
import os
import tempfile
import logging
from typing import Any, Dict

logger = logging.getLogger(__name__)

# Conventions every artifact depends on. Changing any entry changes the fingerprint.
CONVENTIONS = {
    'rotation': 'z-y-z active, D^j_{m\'m} = exp(-i m\' phi) d^j_{m\'m}(theta) exp(-i m psi)',
    'phase': 'Condon-Shortley',
    'basis_order': 'index 0 <-> m = S (n_H = 2S, n_V = 0)',
    'mode_map': '|S,m> = |n_H = S+m> (x) |n_V = S-m>',
    'schur_I': 'I~_L = sum_q (-1)^(K-q) C^{L0}_{Kq,K-q} I_Kq',
    'schur_G': 'G~_L^(m) = sum (-1)^(K-q\') C^{Lm}_{Kq\'\',K-q\'} G_{q\'\'q\'}',
    'gram_angle': 'cos chi_jk = cos th_j cos th_k + sin th_j sin th_k cos(ph_j - ph_k)',
    'discrete_inverse': 'G~_L = sqrt(4pi/(2L+1)) Y_L^T P_L^-1 I~_L',
    'axis_multipoles': 'first-order printed matrix = sqrt(2/3) conj(canonical)',
    'gadget': 'U = Q(q2) H(h) Q(q1); Q = R diag(1,i) R^-1, H = R diag(1,-1) R^-1, det = +1',
}


def hash_content(content: str) -> str:
    """sha256 hex digest of a text payload"""
    return hashlib.sha256(content.encode()).hexdigest()


def convention_fingerprint() -> str:
    """Hash of the phase and angle conventions in force"""
    return hash_content(json.dumps(CONVENTIONS, sort_keys=True))


def dumps_canonical(payload: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed separators)"""
    return json.dumps(payload, sort_keys=True, indent=2, separators=(',', ': ')) + "\n"


def atomic_write(file_path: str, text: str) -> str:
    """Write text via a temp file in the target directory, then rename"""
    directory = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as tmp_file:
            tmp_file.write(text)
            tmp_file.flush()
            os.fsync(tmp_file.fileno())
        os.replace(tmp_path, file_path)
    except Exception as e:
        logger.error(f"Error writing {file_path}: {e}")
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return file_path


def atomic_write_json(file_path: str, payload: Dict[str, Any]) -> str:
    return atomic_write(file_path, dumps_canonical(payload))
