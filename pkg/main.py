import sys
from typing import Optional, Sequence

from modules.cli_module import main as run_cli
from modules.settings_module import Settings

class Main:
    def __init__(self, argv: Optional[Sequence[str]] = None) -> None:
        self.settings = Settings()
        self.argv = argv

    def run(self) -> int:
        return run_cli(self.argv, self.settings)

if __name__ == "__main__":
    main = Main(sys.argv[1:])
    sys.exit(main.run())
