import inspect
import logging
import statistics
import sys
from pathlib import Path

import numpy as np

from superdyn import __version__
from superdyn.Dynamics.classifier import DynamicsClass, classify
from superdyn.Dynamics.generators import generator_names, get_generator, parse_params, parse_scalar, random_unimodular
from superdyn.Dynamics.lawcheck import LawId, LawReport, parse_laws, run_laws
from superdyn.Dynamics.numkernel import CMatrix, use_config
from superdyn.Dynamics.witness import (SearchConfig, WitnessCertificate, best_certificate, dirichlet_budget,
                                       operator_witness_search, search_succeeded, vector_witness_search)
from superdyn.serializer import complex_pair, dump_matrix, dumper, load_matrix, matrix_to_dict, report
from superdyn.utils.config import config
from superdyn.utils.exceptions import (EXIT_BUDGET, EXIT_OK, EXIT_USAGE, BudgetOverflow, MatrixValueError,
                                       SuperdynError, exit_code_for)


_logger = logging.getLogger(__name__)


def _message(exc: BaseException) -> str:
    # KeyError subclasses quote their message in str()
    return str(exc.args[0]) if exc.args else exc.__class__.__name__


def _emit(options, text: str, doc: dict) -> None:
    if options.json:
        sys.stdout.write(dumper(doc).decode())
    else:
        print(text)


def _search_config(options, conf: config, **overrides) -> SearchConfig:
    threads = getattr(options, 'threads', None)
    return SearchConfig.from_config(conf, tol=options.tol, threads=threads, **overrides)


def _config_echo(cfg: SearchConfig, conf: config) -> dict:
    # threads are left out so reports do not depend on the machine
    return {'profile': conf.name, 'tol': cfg.tol, 'n_max': cfg.n_max, 'epsilon': cfg.epsilon,
            'record_only': cfg.record_only, 'stop_at_epsilon': cfg.stop_at_epsilon,
            'rigid': cfg.rigid, 'chunk_size': cfg.chunk_size}


def classification_to_dict(result: DynamicsClass) -> dict:
    spectrum = result.spectrum
    doc = {
        'verdict': result.verdict.value,
        'spectrum': {
            'eigenvalues': [{'value': complex_pair(p.value),
                             'algebraic_mult': p.algebraic_mult,
                             'geometric_mult': p.geometric_mult} for p in spectrum.eigenvalues],
            'modulus_min': spectrum.modulus_min,
            'modulus_max': spectrum.modulus_max,
            'spread': spectrum.spread,
        },
        'margin': result.margin,
    }
    if result.certificate is not None:
        cert = result.certificate
        doc['certificate'] = {'radius': cert.radius,
                              'eigenbasis_condition': cert.eigenbasis_condition,
                              'canonical_form': matrix_to_dict(cert.canonical_form)}
    else:
        obs = result.obstruction
        doc['obstruction'] = {'kind': obs.kind.value, 'detail': obs.detail,
                              'eigenvalues': [complex_pair(z) for z in obs.eigenvalues],
                              'algebraic_mult': obs.algebraic_mult,
                              'geometric_mult': obs.geometric_mult}
    return doc


def certificate_to_dict(cert: WitnessCertificate) -> dict:
    return {'n': cert.n, 'lambda': complex_pair(cert.lam), 'log_abs_lambda': cert.log_abs_lambda,
            'arg_lambda': cert.arg_lambda, 'residual': cert.residual, 'norm_kind': cert.norm_kind.value}


def law_report_to_dict(rep: LawReport) -> dict:
    return {'law_id': rep.law_id.value, 'passed': rep.passed, 'margin': rep.margin,
            'detail': rep.detail, 'inputs': rep.inputs}


def parse_vector(text: str, d: int) -> np.ndarray:
    """'e3' is the third standard basis vector; otherwise comma separated scalars."""
    text = text.strip()
    if text.startswith('e') and text[1:].isdigit():
        k = int(text[1:])
        if not 1 <= k <= d:
            raise MatrixValueError('basis vector %s outside K^%d' % (text, d))
        x = np.zeros(d, dtype=complex)
        x[k - 1] = 1.0
        return x
    return np.array([complex(parse_scalar(v)) for v in text.split(',') if v.strip()], dtype=complex)


def cmd_classify(options, conf: config) -> int:
    A = load_matrix(options.path)
    tol = conf.tol if options.tol is None else options.tol
    result = classify(A, tol)

    lines = ['verdict: %s' % result.verdict.value]
    if result.positive:
        lines.append('R = %.12g, eigenbasis condition = %.6g'
                     % (result.certificate.radius, result.certificate.eigenbasis_condition))
    else:
        lines.append('obstruction: %s (%s)' % (result.obstruction.kind.value, result.obstruction.detail))
    doc = report('classify', A, {'profile': conf.name, 'tol': tol}, **classification_to_dict(result))
    _emit(options, '\n'.join(lines), doc)
    return EXIT_OK


def cmd_witness(options, conf: config) -> int:
    A = load_matrix(options.path)
    cfg = _search_config(options, conf, n_max=options.n_max, epsilon=options.epsilon, rigid=options.rigid,
                         record_only=False if options.all else None)
    if options.vector is not None:
        x = parse_vector(options.vector, A.dim)
        certificates = vector_witness_search(A, x, cfg)
    else:
        certificates = operator_witness_search(A, cfg)

    succeeded = search_succeeded(certificates, cfg)
    best = best_certificate(certificates)
    status = 'witness found' if succeeded else 'budget exhausted'
    lines = ['%s after %d records' % (status, len(certificates))]
    for cert in certificates:
        lines.append('n=%-8d lambda=%-40s residual=%.6g' % (cert.n, cert.lam, cert.residual))
    lines.append('best: n=%d residual=%.6g' % (best.n, best.residual))

    doc = report('witness', A, _config_echo(cfg, conf), norm_kind=best.norm_kind.value,
                 succeeded=succeeded, best=certificate_to_dict(best),
                 certificates=[certificate_to_dict(c) for c in certificates])
    _emit(options, '\n'.join(lines), doc)
    return EXIT_OK if succeeded else EXIT_BUDGET


def cmd_verify(options, conf: config) -> int:
    A = load_matrix(options.path)
    settings = conf.default_settings
    laws = parse_laws(options.laws.split(',')) if options.laws else list(LawId)
    cfg = _search_config(options, conf)
    seed = settings['verify_seed'] if options.seed is None else options.seed
    samples = settings['verify_samples'] if options.samples is None else options.samples
    powers = settings['verify_powers'] if options.powers is None else \
        [int(p) for p in options.powers.split(',')]

    reports = run_laws(A, laws, cfg, np.random.default_rng(seed), samples=samples, powers=powers,
                       cond_bound=settings['verify_cond_bound'])
    passed = all(r.passed for r in reports)

    lines = ['%-20s %-6s margin=%-12.4g %s' % (r.law_id.value, 'pass' if r.passed else 'FAIL', r.margin, r.detail)
             for r in reports]
    lines.append('all laws passed' if passed else 'some laws failed')
    echo = _config_echo(cfg, conf)
    echo.update(seed=seed, samples=samples, powers=list(powers))
    doc = report('verify', A, echo, passed=passed, laws=[law_report_to_dict(r) for r in reports])
    _emit(options, '\n'.join(lines), doc)
    return EXIT_OK if passed else EXIT_BUDGET


def cmd_gen(options, conf: config) -> int:
    family = get_generator(options.name)
    params = parse_params(options.params)
    if options.seed is not None:
        params['seed'] = options.seed
    accepted = inspect.signature(family).parameters
    if not any(p.kind is p.VAR_KEYWORD for p in accepted.values()):
        unknown = sorted(set(params) - set(accepted))
        if unknown:
            raise MatrixValueError('%s does not take %s' % (options.name, ', '.join(unknown)))
    try:
        A = family(**params)
    except TypeError as e:
        raise MatrixValueError('bad parameters for %s: %s' % (options.name, e))

    data = dump_matrix(A)
    if options.out:
        Path(options.out).write_bytes(data)
        _logger.info('Wrote %s (d=%d) to %s', options.name, A.dim, options.out)
        print('Wrote %s' % options.out)
    else:
        sys.stdout.write(data.decode())
    return EXIT_OK


def budget_growth(dims, samples: int, epsilon: float, n_max: int, seed: int, threads: int = 1):
    """First-success n of operator search for random unimodular diagonals per dimension."""
    cfg = SearchConfig(n_max=n_max, epsilon=epsilon, threads=threads)
    rows = []
    for d in dims:
        hits = []
        for k in range(samples):
            A: CMatrix = random_unimodular(d, seed=seed + 1000 * d + k)
            certificates = operator_witness_search(A, cfg)
            if search_succeeded(certificates, cfg):
                hits.append(certificates[-1].n)
        try:
            budget = dirichlet_budget(d, epsilon / (2 * np.pi))
        except BudgetOverflow:
            budget = None
        rows.append({'d': d, 'found': len(hits), 'samples': samples,
                     'median_n': statistics.median(hits) if hits else None,
                     'max_n': max(hits) if hits else None,
                     'dirichlet_budget': budget})
    return rows


def _plot(rows, path: str) -> None:
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots()
    found = [r for r in rows if r['median_n'] is not None]
    ax.semilogy([r['d'] for r in found], [r['median_n'] for r in found], 'o-', label='median first success')
    ax.semilogy([r['d'] for r in found], [r['max_n'] for r in found], 's--', label='max first success')
    bounded = [r for r in rows if r['dirichlet_budget'] is not None]
    ax.semilogy([r['d'] for r in bounded], [r['dirichlet_budget'] for r in bounded], ':', label='pigeonhole budget')
    ax.set_xlabel('dimension d')
    ax.set_ylabel('n')
    ax.legend()
    fig.savefig(path)
    plt.close(fig)


def cmd_demo(options, conf: config) -> int:
    settings = conf.default_settings
    dims = settings['demo_dims'] if options.dims is None else [int(d) for d in options.dims.split(',')]
    samples = settings['demo_samples'] if options.samples is None else options.samples
    epsilon = settings['demo_epsilon'] if options.epsilon is None else options.epsilon
    n_max = conf.n_max if options.n_max is None else options.n_max
    threads = conf.effective_threads() if options.threads is None else options.threads

    rows = budget_growth(dims, samples, epsilon, n_max, options.seed, threads)
    lines = ['%3s %8s %10s %10s %14s' % ('d', 'found', 'median n', 'max n', 'budget')]
    for r in rows:
        lines.append('%3d %4d/%-3d %10s %10s %14s' % (r['d'], r['found'], r['samples'], r['median_n'],
                                                     r['max_n'], r['dirichlet_budget']))
    doc = report('demo budget-growth', None, {'profile': conf.name, 'epsilon': epsilon, 'n_max': n_max,
                                              'seed': options.seed}, rows=rows)
    _emit(options, '\n'.join(lines), doc)
    if options.plot:
        _plot(rows, options.plot)
        print('Wrote %s' % options.plot)
    return EXIT_OK


def build_parser():
    import argparse
    description = """
Decides super-recurrence and super-rigidity of finite-dimensional matrices.

In finite dimension super-recurrence, super-rigidity and uniform
super-rigidity coincide: a matrix has them exactly when it is diagonalizable
and all of its eigenvalues share one nonzero modulus R.

Matrices are read from JSON files of the form

    {"dim": 2, "field": "C", "data": [[re, im], [re, im], [re, im], [re, im]]}

with row-major entries. Numeric defaults come from the profile yaml files in
`superdyn/utils`, selected with --profile or in `settings.yaml`.

Exit codes: 0 success, 1 budget exhausted (or a law failed), 2 usage or
parse error, 3 numerical failure.
"""

    parser = argparse.ArgumentParser(
        prog='superdyn',
        description=description,
        formatter_class=argparse.RawDescriptionHelpFormatter)

    parser.add_argument('--profile', action='store', dest='profile',
                        help="""Numeric profile to use (desk, strict, quick).""")
    parser.add_argument('--log-file', action='store', dest='log_file',
                        help="""Log file, `-` logs to stderr.""")
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)

    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    def common(p, search=True):
        p.add_argument('path', help="""Matrix file (JSON).""")
        p.add_argument('--tol', type=float, dest='tol', help="""Classification tolerance.""")
        p.add_argument('--json', action='store_true', dest='json', help="""Print the JSON report.""")
        if search:
            p.add_argument('--threads', type=int, dest='threads', help="""Witness search threads.""")

    p = sub.add_parser('classify', help="""Classify a matrix.""")
    common(p, search=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser('witness', help="""Search for witnesses (n, lambda).""")
    common(p)
    p.add_argument('--n-max', type=int, dest='n_max', help="""Largest exponent scanned.""")
    p.add_argument('--epsilon', type=float, dest='epsilon', help="""Target residual.""")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument('--vector', dest='vector', metavar='X',
                      help="""Vector witness for X (`e1` or comma separated scalars).""")
    mode.add_argument('--operator', action='store_const', const=None, dest='vector',
                      help="""Operator witness (default).""")
    p.add_argument('--rigid', action='store_true', dest='rigid', help="""Fix lambda = 1.""")
    p.add_argument('--all', action='store_true', dest='all', help="""List every n, not only records.""")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser('verify', help="""Check structural laws on a matrix.""")
    common(p)
    p.add_argument('--laws', dest='laws', help="""Comma separated laws, default all of: %s."""
                   % ', '.join(law.value for law in LawId))
    p.add_argument('--seed', type=int, dest='seed', help="""Seed of the companion matrices.""")
    p.add_argument('--samples', type=int, dest='samples', help="""Companions per sampled law.""")
    p.add_argument('--powers', dest='powers', help="""Comma separated powers p for the power laws.""")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('gen', help="""Write a matrix from a named family.""",
                       description="""Families: %s.""" % ', '.join(generator_names()))
    p.add_argument('name', help="""Family name.""")
    p.add_argument('params', nargs='*', metavar='key=value', help="""Family parameters.""")
    p.add_argument('--out', dest='out', help="""Output file, default stdout.""")
    p.add_argument('--seed', type=int, dest='seed', help="""Seed of random families.""")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser('demo', help="""Non-normative demonstrations.""")
    demos = p.add_subparsers(dest='demo', metavar='demo')
    demos.required = True
    q = demos.add_parser('budget-growth', help="""First witness n against dimension for random unimodular diagonals.""")
    q.add_argument('--dims', dest='dims', help="""Comma separated dimensions.""")
    q.add_argument('--samples', type=int, dest='samples', help="""Matrices per dimension.""")
    q.add_argument('--epsilon', type=float, dest='epsilon', help="""Target residual.""")
    q.add_argument('--n-max', type=int, dest='n_max', help="""Largest exponent scanned.""")
    q.add_argument('--threads', type=int, dest='threads', help="""Witness search threads.""")
    q.add_argument('--seed', type=int, default=0, dest='seed', help="""Base seed.""")
    q.add_argument('--plot', dest='plot', metavar='PNG', help="""Save a plot (needs matplotlib).""")
    q.add_argument('--json', action='store_true', dest='json', help="""Print the JSON report.""")
    q.set_defaults(func=cmd_demo)

    return parser


def _setup_logging(conf: config, log_file: str = None) -> None:
    settings = conf.default_settings
    level = getattr(logging, str(settings.get('log_level', 'INFO')).upper(), logging.INFO)
    log_file = settings.get('log_file', 'superdyn.log') if log_file is None else log_file
    if log_file == '-':
        logging.basicConfig(stream=sys.stderr, level=level)
    else:
        logging.basicConfig(filename=log_file, level=level)
    logging.captureWarnings(True)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        options = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        conf = config(options.profile)
    except SuperdynError as e:
        print('superdyn: %s' % _message(e), file=sys.stderr)
        return exit_code_for(e)

    _setup_logging(conf, options.log_file)
    use_config(conf)
    _logger.info('superdyn %s: %s', __version__, ' '.join(sys.argv[1:] if argv is None else argv))

    try:
        return options.func(options, conf)
    except SuperdynError as e:
        _logger.error('%s: %s', e.__class__.__name__, _message(e))
        print('superdyn: %s: %s' % (e.__class__.__name__, _message(e)), file=sys.stderr)
        return exit_code_for(e)


if __name__ == '__main__':
    raise SystemExit(main())
