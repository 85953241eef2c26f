"""Entry point for cs-qaoa-lab CLI."""

from cs_qaoa_lab.cli import cli_main

if __name__ == "__main__":
    cli_main()
