"""Rich终端界面"""

from contextlib import contextmanager
from typing import Any, Callable, Dict, Iterator

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table


class RichInterface:
    """Rich美化的终端界面"""

    def __init__(self, quiet: bool = False):
        """
        初始化界面

        Args:
            quiet: 是否关闭进度条（测试或重定向输出时）
        """
        self.console = Console()
        self.quiet = quiet

    def show_welcome(self, command: str, version: str):
        """显示命令横幅"""
        welcome_text = f"""
[bold cyan]随机大涡模拟流水线[/bold cyan] v{version}
记忆方程 · 高斯滤波 · 分数布朗运动闭合

[dim]命令: {command}[/dim]
        """
        self.console.print(Panel.fit(
            welcome_text.strip(),
            border_style="cyan",
            box=box.DOUBLE
        ))

    def show_parameters(self, parameters: Dict[str, Any]):
        """
        以表格显示运行参数

        Args:
            parameters: 展平的参数字典
        """
        table = Table(title="运行参数", box=box.ROUNDED)
        table.add_column("参数", style="cyan", justify="left")
        table.add_column("取值", style="green", justify="right")

        for key, value in parameters.items():
            table.add_row(key, str(value))

        self.console.print(table)

    @contextmanager
    def progress(self, total: int, description: str) -> Iterator[Callable[[int], None]]:
        """
        成员求解进度条

        Yields:
            每完成一个成员调用一次的回调
        """
        if self.quiet:
            yield lambda _: None
            return

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            console=self.console,
            transient=True
        ) as progress:
            task = progress.add_task(description=description, total=total)
            yield lambda _: progress.advance(task)

    def show_summary(self, summary: Dict[str, Any]):
        """
        显示误差诊断

        Args:
            summary: compare 命令生成的摘要
        """
        table = Table(title="误差诊断", box=box.ROUNDED)
        table.add_column("指标", style="cyan", justify="left")
        table.add_column("数值", style="green", justify="right")

        for key, value in summary.items():
            shown = f"{value:.6e}" if isinstance(value, float) else str(value)
            table.add_row(key, shown)

        self.console.print()
        self.console.print(table)

    def show_artifacts(self, artifacts: Dict[str, str]):
        """显示本次写出的产物"""
        if not artifacts:
            return
        lines = "\n".join(f"• {name}: {path}" for name, path in artifacts.items())
        self.console.print(Panel(
            lines,
            title="[bold green]产物[/bold green]",
            border_style="green",
            box=box.ROUNDED
        ))

    def show_error(self, error: str, error_type: str = "Error"):
        """
        显示错误信息

        Args:
            error: 错误信息
            error_type: 错误类型
        """
        self.console.print()
        self.console.print(Panel(
            f"[red][bold]{error_type}:[/bold] {error}[/red]",
            title="[bold red]执行失败[/bold red]",
            border_style="red",
            box=box.ROUNDED
        ))

    def show_info(self, message: str):
        self.console.print(f"[cyan]ℹ️  {message}[/cyan]")

    def show_warning(self, message: str):
        self.console.print(f"[yellow]⚠️  {message}[/yellow]")

    def show_success(self, message: str):
        self.console.print(f"[green]✓ {message}[/green]")

    def print(self, *args, **kwargs):
        """直接打印（代理到console）"""
        self.console.print(*args, **kwargs)
