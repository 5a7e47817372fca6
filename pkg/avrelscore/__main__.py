"""Allow ``python -m avrelscore``."""

from avrelscore.cli.runner import main

if __name__ == "__main__":
    main()
