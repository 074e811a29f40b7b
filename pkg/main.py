#!/usr/bin/env python3
"""
随机大涡模拟流水线 - 主入口

带记忆项的反应扩散方程，高斯滤波亚格子项，分数布朗运动随机闭合
"""

import sys
import argparse
import logging
from pathlib import Path

# 添加src到路径
sys.path.insert(0, str(Path(__file__).parent))

from src import __version__
from src.utils import ConfigError, PipelineError, build_parameters, load_config, setup_logger
from src.core import PipelineWorkflow
from src.cli import RichInterface

COMMANDS = ('run-benchmark', 'calibrate', 'run-sles', 'compare', 'fbm-sample')


def parse_args(argv=None):
    """解析命令行参数"""
    parser = argparse.ArgumentParser(
        description="随机大涡模拟流水线 - 细网格基准、SGS 标定、随机 LES 与误差诊断"
    )

    parser.add_argument(
        'command',
        choices=COMMANDS,
        help='要执行的流水线阶段'
    )

    parser.add_argument(
        '--config',
        type=str,
        default='config/config.yaml',
        help='配置文件路径，也可以是 manifest.json (默认: config/config.yaml)'
    )

    parser.add_argument(
        '--seed',
        type=int,
        default=None,
        help='主随机种子，覆盖 run.seed'
    )

    parser.add_argument(
        '--out',
        type=str,
        default=None,
        help='输出目录，覆盖 output.out_dir'
    )

    parser.add_argument(
        '--members',
        type=int,
        default=None,
        help='成员数: run-benchmark 覆盖 M，run-sles/compare 覆盖 M_les，fbm-sample 为路径数'
    )

    parser.add_argument(
        '--baseline',
        action='store_true',
        help='compare 时同时计算无参数化粗网格解的误差'
    )

    parser.add_argument(
        '--log-level',
        type=str,
        default=None,
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help='日志级别'
    )

    parser.add_argument(
        '--quiet',
        action='store_true',
        help='不显示进度条'
    )

    return parser.parse_args(argv)


def apply_overrides(params, args):
    """把命令行参数应用到运行参数上"""
    overrides = {'seed': args.seed, 'out_dir': args.out}
    if args.members is not None:
        if args.command == 'run-benchmark':
            overrides['members'] = args.members
        elif args.command in ('run-sles', 'compare'):
            overrides['les_members'] = args.members
    return params.with_overrides(**overrides)


def run_command(workflow: PipelineWorkflow, args):
    if args.command == 'run-benchmark':
        return workflow.run_benchmark()
    if args.command == 'calibrate':
        return workflow.calibrate()
    if args.command == 'run-sles':
        return workflow.run_sles()
    if args.command == 'compare':
        return workflow.compare(baseline=args.baseline)
    return workflow.fbm_sample(paths=args.members or 1)


def main(argv=None) -> int:
    """主函数，返回进程退出码"""
    args = parse_args(argv)

    # 加载配置
    try:
        config = load_config(args.config)
        params = apply_overrides(build_parameters(config), args)
    except FileNotFoundError as e:
        print(f"错误: {e}")
        return ConfigError.exit_code
    except ConfigError as e:
        print(f"错误: 配置无效: {e}")
        return e.exit_code

    # 设置日志
    log_level = args.log_level or config.get('logging.level', 'INFO')
    try:
        logger = setup_logger(
            level=log_level,
            log_file=config.get('logging.file', 'logs/pipeline.log'),
            log_format=config.get('logging.format'),
            command=args.command,
            seed=params.seed
        )
    except ConfigError as e:
        print(f"错误: 配置无效: {e}")
        return e.exit_code

    logger.info("=" * 60)
    logger.info(f"命令 {args.command} 启动, 输出目录: {params.out_dir}")
    logger.info("=" * 60)

    ui = RichInterface(quiet=args.quiet)
    ui.show_welcome(args.command, __version__)
    ui.show_parameters(params.to_flat_dict())

    try:
        workflow = PipelineWorkflow(params, ui)
        run_command(workflow, args)
        ui.show_success(f"{args.command} 完成")
        logger.info(f"命令 {args.command} 完成")
        return 0

    except KeyboardInterrupt:
        ui.print("\n[yellow]程序被用户中断[/yellow]")
        logger.info("程序被用户中断")
        return 0

    except PipelineError as e:
        logger.error(f"{type(e).__name__}: {e}")
        ui.show_error(str(e), type(e).__name__)
        return e.exit_code

    except Exception as e:
        logger.error(f"程序异常: {str(e)}", exc_info=True)
        ui.show_error(str(e), type(e).__name__)
        return 1


if __name__ == "__main__":
    sys.exit(main())
