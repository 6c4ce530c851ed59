"""
Matrix Commands Module
Generates cyclic S-matrices and lists the primitive polynomial table
"""
import logging

from commands import command
from services.mls import polynomial_table, primitive_polynomial, smatrix
from storage.formats import write_matrix

logger = logging.getLogger(__name__)


@command
def gen_matrix(args):
    """
    Generate the cyclic S-matrix of a degree and store it

    Returns:
        tuple: matrix summary and exit code
    """
    if args.table:
        table = [{'degree': poly.degree, 'polynomial': str(poly), 'period': poly.period}
                 for poly in polynomial_table()]
        return {'success': True, 'polynomials': table}, 0

    m = smatrix(args.degree, args.p, args.q)
    payload = {
        'success': True,
        'degree': m.degree,
        'polynomial': str(primitive_polynomial(m.degree)),
        'n': m.n,
        'p': m.p,
        'q': m.q,
        'ones': int(m.first_row.bits.sum()),
    }
    if args.out:
        payload['path'] = write_matrix(m, args.out)
        logger.info('✓ Matrix N = %d (%d x %d) written to %s', m.n, m.p, m.q, args.out)
    return payload, 0


def register(subparsers):
    p = subparsers.add_parser('gen-matrix', help='generate a cyclic S-matrix from an MLS')
    p.add_argument('--degree', type=int, default=8, help='register length n, N = 2^n - 1')
    p.add_argument('--rows', '--p', dest='p', type=int, help='pattern rows (default: most nearly square)')
    p.add_argument('--cols', '--q', dest='q', type=int, help='pattern columns')
    p.add_argument('--out', help='matrix file to write')
    p.add_argument('--table', action='store_true', help='list the primitive polynomial table instead')
    p.set_defaults(handler=gen_matrix)
