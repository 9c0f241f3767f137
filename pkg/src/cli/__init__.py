from src.cli.commands import COMMANDS
from src.cli.parser import build_parser

__all__ = ["COMMANDS", "build_parser"]
