"""
Command line entry point: `adaframe [-v] <command> [options]`.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""
# stdlib
import argparse
import json
import logging
import sys
from typing import List, Optional
# lib
import numpy as np
# local
from adaframe.controllers.exceptions import AdaFrameError, NumericalFailure, UnknownBankName
from adaframe.corpus import gen_sparse_wavelet_signal, gen_staircase
from adaframe.experiments import (
    deconv_default_layers,
    deconv_full_connect_layers,
    run_recovery_experiment,
    verify_bank,
)
from adaframe.fileio import (
    read_bank,
    read_signal,
    read_tree,
    render_report,
    write_adf1,
    write_bank,
    write_signal,
    write_tree,
)
from adaframe.learn import (
    LearnConfig,
    design_recon_filters,
    learn_best_of,
    learn_biframe_critical,
    learn_biframe_decomp,
    learn_frame,
    learn_frame_penalty,
)
from adaframe.multilevel import TreeSpec, build_tree, mra_reconstruct
from adaframe.pipelines import compress, deconv_compare, denoise, psnr, tree_features
from adaframe.tensor import FilterBank
from adaframe.utils import StageErrorFormatter, load_learn_config, parse_float_list, parse_int_list
from adaframe.wavelets import BUILTIN_BANKS, get_bank


__all__ = [
    'main',
]

LOGGER = 'adaframe.cli'

SUCCESS_CODE = 0
USAGE_ERROR = 1
NUMERICAL_FAILURE = 2

messages = {
    1001: 'Wrote filter bank to ',
    1002: 'Wrote signal to ',
    1003: 'Wrote decomposition tree to ',
    1004: 'Wrote table to ',
    3001: 'Failed to load the learning configuration.',
    3002: 'Invalid input.',
    3003: 'Invalid learning configuration.',
    3004: 'Numerical failure.',
    3006: 'Filter bank failed verification.',
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; this CLI reserves 2 for numerical failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f'{self.prog}: error: {message}\n')


def _int_list(text: str):
    try:
        values = parse_int_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma separated integers, got {text!r}')
    if not values:
        raise argparse.ArgumentTypeError('expected at least one integer')
    return values


def _float_list(text: str):
    try:
        values = parse_float_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma separated numbers, got {text!r}')
    if not values:
        raise argparse.ArgumentTypeError('expected at least one number')
    return values


class _StageFailure(Exception):
    def __init__(self, code, detail):
        super().__init__(detail)
        self.code = code


def _load_bank(spec: str, d: int = 1) -> FilterBank:
    if spec in BUILTIN_BANKS:
        return get_bank(spec, d=d)
    return read_bank(spec)


def _config(args, fmt: StageErrorFormatter) -> LearnConfig:
    """Defaults, then --config, then explicit flags."""
    values = {}
    if args.config:
        status, config_data, msg = load_learn_config(args.config)
        if not status:
            raise _StageFailure(3001, msg)
        values.update(config_data['processed'])
        fmt.add_successful('load_config', args.config)
    flags = {
        'm': args.m,
        'support': args.support,
        'M': args.sampling,
        'eta': args.eta,
        'lam': args.lam,
        'sparsity': args.sparsity,
        'seed': args.seed,
        'restarts': args.restarts,
        'max_outer': args.max_outer,
        'channel_support': args.channel_support,
        'channel_sampling': args.channel_sampling,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    if args.lowpass is not None:
        values['lowpass_constraint'] = args.lowpass
    if args.init:
        kind, _, target = args.init.partition(':')
        values['init'] = kind
        if kind == 'waveletBank':
            values['init_name'] = target
        elif kind == 'explicit':
            values['init_bank'] = read_bank(target)
    if 'm' not in values or 'support' not in values:
        raise _StageFailure(3003, '`--m` and `--support` are required unless the config file sets them')
    return LearnConfig(**values)


def _read_batch(paths: List[str]) -> List[np.ndarray]:
    return [read_signal(path) for path in paths]


def _run_learner(args, learner, fmt):
    cfg = _config(args, fmt)
    batch = _read_batch(args.signals)
    fmt.add_successful('read_signals', f'{len(batch)} signals')
    if cfg.restarts > 1:
        result = learn_best_of(batch, cfg, learner)
    else:
        result = learner(batch, cfg)
    fmt.add_successful('learn', f'objective {result[-1].best_objective:.6g}')
    if args.trace:
        result[-1].to_csv(args.trace)
    return cfg, result


def cmd_learn_frame(args, fmt) -> int:
    learner = learn_frame_penalty if args.penalty else learn_frame
    _, (bank, _) = _run_learner(args, learner, fmt)
    write_bank(args.out, bank)
    print(f'{messages[1001]}{args.out}')
    return SUCCESS_CODE


def cmd_learn_biframe(args, fmt) -> int:
    cfg, (A, _) = _run_learner(args, learn_biframe_decomp, fmt)
    B = design_recon_filters(A, args.mode, cfg.alpha if args.alpha is None else args.alpha)
    fmt.add_successful('design_recon_filters', args.mode)
    write_bank(args.out, A)
    write_bank(args.recon_out, B)
    print(f'{messages[1001]}{args.out}, {args.recon_out}')
    return SUCCESS_CODE


def cmd_learn_critical(args, fmt) -> int:
    _, (A, B, _) = _run_learner(args, learn_biframe_critical, fmt)
    write_bank(args.out, A)
    write_bank(args.recon_out, B)
    print(f'{messages[1001]}{args.out}, {args.recon_out}')
    return SUCCESS_CODE


def cmd_recon_filters(args, fmt) -> int:
    A = _load_bank(args.bank, args.dim)
    B = design_recon_filters(A, args.mode, args.alpha)
    write_bank(args.out, B)
    print(f'{messages[1001]}{args.out}')
    return SUCCESS_CODE


def cmd_verify(args, fmt) -> int:
    A = _load_bank(args.bank, args.dim)
    B = _load_bank(args.recon, args.dim) if args.recon else None
    report = verify_bank(A, B, args.grid)
    print(render_report(report, args.tolerance))
    if max(report.time_residual, report.spectral_residual) > args.tolerance:
        logging.getLogger(f'{LOGGER}.cmd_verify').error(f'3006: {messages[3006]}')
        return NUMERICAL_FAILURE
    return SUCCESS_CODE


def _tree_spec(args, d: int) -> TreeSpec:
    banks = [_load_bank(spec, d) for spec in args.bank]
    return TreeSpec(
        mode=args.mode,
        banks=banks[0] if len(banks) == 1 else banks,
        levels=args.levels,
        nonlinearity=args.nonlinearity or ('abs' if args.mode == 'scattering' else 'relu'),
        prune_threshold=args.prune,
    )


def cmd_decompose(args, fmt) -> int:
    v = read_signal(args.signal)
    tree = build_tree(v, _tree_spec(args, v.ndim))
    fmt.add_successful('decompose', f'{tree.node_count()} nodes')
    write_tree(args.out, tree)
    print(f'{messages[1003]}{args.out}')
    return SUCCESS_CODE


def cmd_reconstruct(args, fmt) -> int:
    tree = read_tree(args.tree)
    B = _load_bank(args.bank, len(tree.root_shape))
    write_signal(args.out, mra_reconstruct(tree, B))
    print(f'{messages[1002]}{args.out}')
    return SUCCESS_CODE


def _pair(args, d):
    A = _load_bank(args.bank, d)
    if args.recon:
        B = _load_bank(args.recon, d)
    else:
        B = design_recon_filters(A, 'minNorm')
    return A, B


def cmd_denoise(args, fmt) -> int:
    x = read_signal(args.signal)
    A, B = _pair(args, x.ndim)
    x_hat = denoise(x, A, B, args.tau, args.levels, args.rule, args.exempt_lowpass)
    write_signal(args.out, x_hat)
    print(f'{messages[1002]}{args.out}')
    return SUCCESS_CODE


def cmd_compress(args, fmt) -> int:
    x = read_signal(args.signal)
    A, B = _pair(args, x.ndim)
    result = compress(x, A, B, args.levels, args.keep, args.scale)
    if args.out:
        write_signal(args.out, result.reconstructed)
    summary = result.to_dict()
    summary['psnrDb'] = 'inf' if np.isinf(result.psnr_db) else result.psnr_db
    print(json.dumps(summary))
    return SUCCESS_CODE


def cmd_psnr(args, fmt) -> int:
    value = psnr(read_signal(args.first), read_signal(args.second), args.scale)
    print('inf' if np.isinf(value) else f'{value:.17g}')
    return SUCCESS_CODE


def cmd_features(args, fmt) -> int:
    v = read_signal(args.signal)
    features = tree_features(build_tree(v, _tree_spec(args, v.ndim)))
    write_adf1(args.out, features)
    print(f'{messages[1002]}{args.out}')
    return SUCCESS_CODE


def cmd_deconv_compare(args, fmt) -> int:
    x = read_signal(args.signal)
    layers = (deconv_full_connect_layers if args.full_connect else deconv_default_layers)(args.seed, args.activation)
    report = deconv_compare(x, layers)
    print(json.dumps(report.to_dict()))
    return SUCCESS_CODE


def cmd_gen_staircase(args, fmt) -> int:
    write_adf1(args.out, gen_staircase(args.length, args.min_run, args.seed))
    print(f'{messages[1002]}{args.out}')
    return SUCCESS_CODE


def cmd_gen_sparse(args, fmt) -> int:
    write_adf1(args.out, gen_sparse_wavelet_signal(args.wavelet, args.density, args.length, args.seed))
    print(f'{messages[1002]}{args.out}')
    return SUCCESS_CODE


def cmd_recover_table(args, fmt) -> int:
    wavelets = [w for w in args.wavelets.split(',') if w]
    for name in wavelets:
        if name not in BUILTIN_BANKS:
            raise UnknownBankName(name)
    table = run_recovery_experiment(
        wavelets,
        args.densities,
        trials=args.trials,
        restarts=args.restarts,
        length=args.length,
        seed=args.seed,
        max_outer=args.max_outer,
    )
    table.to_csv(args.out)
    print(f'{messages[1004]}{args.out}')
    return SUCCESS_CODE


def _learn_flags(parser):
    parser.add_argument('signals', nargs='+', help='training signals (.adf1 or .pgm)')
    parser.add_argument('--out', required=True, help='filter bank JSON to write')
    parser.add_argument('--config', help='JSON file of learning settings')
    parser.add_argument('--m', type=int)
    parser.add_argument('--support', type=_int_list, help='filter support, e.g. 6,6')
    parser.add_argument('--sampling', type=_int_list, help='sampling factors, e.g. 2,2')
    parser.add_argument('--eta', type=float)
    parser.add_argument('--lambda', dest='lam', type=float)
    parser.add_argument('--sparsity', choices=['l1', 'l0', 'huber'])
    parser.add_argument('--init', help='randomOrthogonal, waveletBank:<name> or explicit:<bank.json>')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--restarts', type=int)
    parser.add_argument('--max-outer', dest='max_outer', type=int)
    parser.add_argument('--channel-support', dest='channel_support', type=int)
    parser.add_argument('--channel-sampling', dest='channel_sampling', type=int)
    parser.add_argument('--lowpass', action=argparse.BooleanOptionalAction, help='enforce one lowpass filter')
    parser.add_argument('--trace', help='CSV file for the learning trace')


def _tree_flags(parser, default_mode='mra'):
    parser.add_argument('signal')
    parser.add_argument('--bank', action='append', required=True, help='bank per level (repeatable)')
    parser.add_argument('--mode', choices=['mra', 'scattering', 'convnet'], default=default_mode)
    parser.add_argument('--levels', type=int, default=1)
    parser.add_argument('--nonlinearity', choices=['none', 'abs', 'relu'])
    parser.add_argument('--prune', type=float, default=0.0)
    parser.add_argument('--out', required=True)


def _pair_flags(parser):
    parser.add_argument('signal')
    parser.add_argument('--bank', required=True, help='decomposition bank JSON or built-in name')
    parser.add_argument('--recon', help='reconstruction bank; designed by minNorm when omitted')
    parser.add_argument('--levels', type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='adaframe', description='Adaptive wavelet frames and bi-frames.')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    commands = parser.add_subparsers(dest='command', parser_class=_Parser)
    commands.required = True

    sub = commands.add_parser('learn-frame', help='learn a tight frame')
    _learn_flags(sub)
    sub.add_argument('--penalty', action='store_true', help='penalty formulation (d=1, M=1)')
    sub.set_defaults(handler=cmd_learn_frame)

    sub = commands.add_parser('learn-biframe', help='learn a redundant bi-frame')
    _learn_flags(sub)
    sub.add_argument('--recon-out', dest='recon_out', required=True)
    sub.add_argument('--mode', choices=['minNorm', 'tv'], default='minNorm')
    sub.add_argument('--alpha', type=float)
    sub.set_defaults(handler=cmd_learn_biframe)

    sub = commands.add_parser('learn-critical', help='learn a critically sampled bi-frame')
    _learn_flags(sub)
    sub.add_argument('--recon-out', dest='recon_out', required=True)
    sub.set_defaults(handler=cmd_learn_critical)

    sub = commands.add_parser('recon-filters', help='design reconstruction filters')
    sub.add_argument('bank')
    sub.add_argument('--mode', choices=['minNorm', 'tv'], default='minNorm')
    sub.add_argument('--alpha', type=float, default=1.0)
    sub.add_argument('--dim', type=int, default=1)
    sub.add_argument('--out', required=True)
    sub.set_defaults(handler=cmd_recon_filters)

    sub = commands.add_parser('verify', help='UEP report of a bank')
    sub.add_argument('bank', help='filter bank JSON or built-in name')
    sub.add_argument('--recon', help='reconstruction bank; the tight dual when omitted')
    sub.add_argument('--dim', type=int, default=1)
    sub.add_argument('--grid', type=_int_list, help='DFT grid, e.g. 64,64')
    sub.add_argument('--tolerance', type=float, default=1e-6)
    sub.set_defaults(handler=cmd_verify)

    sub = commands.add_parser('decompose', help='multi-level decomposition')
    _tree_flags(sub)
    sub.set_defaults(handler=cmd_decompose)

    sub = commands.add_parser('reconstruct', help='MRA reconstruction of a stored tree')
    sub.add_argument('tree')
    sub.add_argument('--bank', required=True)
    sub.add_argument('--out', required=True)
    sub.set_defaults(handler=cmd_reconstruct)

    sub = commands.add_parser('denoise', help='threshold denoising')
    _pair_flags(sub)
    sub.add_argument('--tau', type=float, default=0.14)
    sub.add_argument('--rule', choices=['soft', 'hard'], default='soft')
    sub.add_argument('--exempt-lowpass', dest='exempt_lowpass', action='store_true')
    sub.add_argument('--out', required=True)
    sub.set_defaults(handler=cmd_denoise)

    sub = commands.add_parser('compress', help='top-k coefficient compression')
    _pair_flags(sub)
    sub.add_argument('--keep', type=float, required=True)
    sub.add_argument('--scale', type=float, default=255.0, help='factor onto the 0-255 scale for PSNR')
    sub.add_argument('--out')
    sub.set_defaults(handler=cmd_compress)

    sub = commands.add_parser('psnr', help='PSNR of two images')
    sub.add_argument('first')
    sub.add_argument('second')
    sub.add_argument('--scale', type=float, default=255.0, help='factor onto the 0-255 scale; 1 for 8-bit values')
    sub.set_defaults(handler=cmd_psnr)

    sub = commands.add_parser('features', help='relu features of a decomposition tree')
    _tree_flags(sub, default_mode='scattering')
    sub.set_defaults(handler=cmd_features)

    sub = commands.add_parser('deconv-compare', help='transpose against designed reconstruction')
    sub.add_argument('signal')
    sub.add_argument('--seed', type=int, default=0)
    sub.add_argument('--activation', choices=['sigmoid', 'tanh', 'none'], default='sigmoid')
    sub.add_argument('--full-connect', dest='full_connect', action='store_true')
    sub.set_defaults(handler=cmd_deconv_compare)

    sub = commands.add_parser('gen-staircase', help='random +1/-1 staircase')
    sub.add_argument('--length', type=int, default=3000)
    sub.add_argument('--min-run', dest='min_run', type=int, default=30)
    sub.add_argument('--seed', type=int, default=0)
    sub.add_argument('--out', required=True)
    sub.set_defaults(handler=cmd_gen_staircase)

    sub = commands.add_parser('gen-sparse', help='signal with sparse wavelet coefficients')
    sub.add_argument('--wavelet', default='db2')
    sub.add_argument('--density', type=float, default=0.1)
    sub.add_argument('--length', type=int, default=1024)
    sub.add_argument('--seed', type=int, default=0)
    sub.add_argument('--out', required=True)
    sub.set_defaults(handler=cmd_gen_sparse)

    sub = commands.add_parser('recover-table', help='wavelet recovery success ratios')
    sub.add_argument('--wavelets', default='db2,db3')
    sub.add_argument('--densities', type=_float_list, default=[0.1, 0.2, 0.3, 0.4, 0.5])
    sub.add_argument('--trials', type=int, default=10)
    sub.add_argument('--restarts', type=int, default=10)
    sub.add_argument('--length', type=int, default=1024)
    sub.add_argument('--max-outer', dest='max_outer', type=int, default=200)
    sub.add_argument('--seed', type=int, default=0)
    sub.add_argument('--out', required=True)
    sub.set_defaults(handler=cmd_recover_table)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    logger = logging.getLogger(f'{LOGGER}.main')
    fmt = StageErrorFormatter(args.command)
    try:
        return args.handler(args, fmt)
    except _StageFailure as e:
        msg = fmt.stage_error(e, f'{e.code}: {messages[e.code]}')
        logger.error(msg)
        return USAGE_ERROR
    except NumericalFailure as e:
        msg = fmt.stage_error(e, f'3004: {messages[3004]}')
        logger.error(msg)
        return NUMERICAL_FAILURE
    except (AdaFrameError, OSError) as e:
        msg = fmt.stage_error(e, f'3002: {messages[3002]}')
        logger.error(msg)
        return USAGE_ERROR


if __name__ == '__main__':
    sys.exit(main())
