if __name__ == "__main__":
    import sys

    from src.cli import main

    sys.exit(main())
