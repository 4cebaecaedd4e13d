"""Run the releff command line with `python -m releff`."""
from .main import main

if __name__ == "__main__":
    main()
