"""Entry point for ``python -m plc_synth`` and the ``plc_synth`` console script."""

from plc_synth.cli import main

if __name__ == "__main__":
    main(prog_name="plc_synth")
