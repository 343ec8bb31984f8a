# Copyright (c) mm-opinion-miner contributors
import sys

from commands import main


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
