"""Command-line figure renderer for simulator CSV outputs."""

import sys

import click

from .figures import KINDS, FigureError, FigureSpec, render


@click.group()
def main():
    """Figure pipeline for the delayed-wave simulation CSVs."""


@main.command("render")
@click.option("--kind", required=True, type=click.Choice(KINDS),
              help="figure kind")
@click.option("--in", "inputs", required=True,
              help="comma-separated input CSV path(s)")
@click.option("--out", required=True, help="output image path (PNG)")
@click.option("--title", default=None, help="optional figure title")
def render_cmd(kind, inputs, out, title):
    """Render one figure from simulator CSV output."""
    paths = [p.strip() for p in inputs.split(",") if p.strip()]
    try:
        spec = FigureSpec(kind=kind, inputs=paths, out=out, title=title)
        info = render(spec)
    except FigureError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    line = f"wrote {info['out']}"
    if "annotation" in info:
        line += f" ({info['annotation']})"
    click.echo(line)


if __name__ == "__main__":
    main()
