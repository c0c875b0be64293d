"""
Command-line front end.

    ontorew rewrite --ontology stock.dl --query q.dl --metrics
    ontorew check --ontology stock.dl
    ontorew chase --ontology stock.dl --data facts.dl --consistency
    ontorew explain --ontology stock.dl --query q.dl
"""
import logging
import sys

import click
from dotenv import load_dotenv

from .config import Config
from .engine.errors import EngineError, TerminationError
from .engine.parser import parse_program
from .engine.pipeline import (
    EmitFormat,
    Toggle,
    attach_query,
    compile_text,
    render,
    resolve_options,
    run_chase,
    run_rewrite,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REFUSED = 2
EXIT_INCOMPLETE = 3

_ON_OFF = click.Choice(['on', 'off'])
_input_file = click.Path(exists=True, dir_okay=False)


def _read(path):
    with open(path, encoding='utf-8') as handle:
        return handle.read()


def _load(ontology_path, query_path=None, query_name=None):
    compiled = compile_text(_read(ontology_path))
    query = attach_query(compiled, _read(query_path), query_name) if query_path else None
    return compiled, query


def _ontology_option(func):
    return click.option('--ontology', required=True, type=_input_file, help='Ontology file')(func)


def _query_options(func):
    func = click.option('--query-name', default=None, help='Query to use when the file holds several')(func)
    return click.option('--query', 'query_path', required=True, type=_input_file, help='Query file')(func)


@click.group()
@click.option('--log-level', envvar='LOG_LEVEL', default=None, help='Logging level')
def cli(log_level):
    """Rewrite conjunctive queries under linear and sticky TGDs."""
    level = (log_level or Config.LOG_LEVEL).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        stream=sys.stderr,
        format='%(levelname)s %(name)s: %(message)s',
        force=True,
    )


@cli.command()
@_ontology_option
@_query_options
@click.option('--elimination', type=click.Choice(['on', 'off', 'auto']), default='auto', show_default=True)
@click.option('--factorization', type=_ON_OFF, default='on', show_default=True)
@click.option('--nc-pruning', type=_ON_OFF, default='on', show_default=True)
@click.option('--max-rounds', envvar='MAX_ROUNDS', type=click.IntRange(min=1), default=Config.DEFAULT_MAX_ROUNDS)
@click.option('--emit', type=click.Choice(['ucq', 'sql', 'datalog']), default='ucq', show_default=True)
@click.option('--metrics', 'show_metrics', is_flag=True, help='Print size, length and width')
@click.option('--trace', is_flag=True, help='Print one line per derivation')
@click.option('--auxiliary', type=click.Choice(['keep', 'drop']), default='drop', show_default=True)
@click.pass_context
def rewrite(ctx, ontology, query_path, query_name, elimination, factorization, nc_pruning,
            max_rounds, emit, show_metrics, trace, auxiliary):
    """Compute the UCQ rewriting of a query."""
    compiled, query = _load(ontology, query_path, query_name)
    options = resolve_options(
        compiled,
        elimination=Toggle(elimination),
        factorization=factorization == 'on',
        nc_pruning=nc_pruning == 'on',
        max_rounds=max_rounds,
        trace=trace,
        keep_auxiliary=auxiliary == 'keep',
    )
    result = run_rewrite(compiled, query, options)
    rendered = render(compiled, query, result, EmitFormat(emit))

    if trace:
        for event in result.trace:
            click.echo(f"% {event}")
    if rendered.text is not None:
        click.echo(rendered.text.rstrip('\n'))
    else:
        for line in rendered.lines:
            click.echo(line)
    if show_metrics:
        click.echo(str(rendered.metrics))
    if not result.complete:
        click.echo(f"warning: round bound {options.max_rounds} reached, rewriting may be incomplete", err=True)
        ctx.exit(EXIT_INCOMPLETE)


@cli.command()
@_ontology_option
def check(ontology):
    """Print the class report of an ontology."""
    compiled, _ = _load(ontology)
    report = compiled.report
    click.echo(report.summary())
    certificate = compiled.certificate
    click.echo(f"termination={certificate or 'none'}")
    for violation in report.violations:
        click.echo(f"  {violation}")
    if report.non_conflicting is False:
        click.echo("warning: key dependencies conflict with the TGDs; rewriting ignores them", err=True)


@cli.command()
@_ontology_option
@click.option('--data', required=True, type=_input_file, help='Fact file')
@click.option('--depth', envvar='CHASE_DEPTH', type=click.IntRange(min=0), default=Config.DEFAULT_CHASE_DEPTH, show_default=True)
@click.option('--consistency', is_flag=True, help='Check the negative constraints')
@click.option('--kds', is_flag=True, help='Check the key dependencies')
def chase(ontology, data, depth, consistency, kds):
    """Chase a database with the ontology's TGDs."""
    compiled, _ = _load(ontology)
    report = run_chase(compiled, parse_program(_read(data)), depth, consistency, kds)
    for atom in report.result.instance.sorted_atoms():
        click.echo(f"{atom}.")
    click.echo(f"% saturated={str(report.result.saturated).lower()} rounds={report.result.rounds_used}")
    if report.consistency is not None:
        click.echo(f"% consistency={report.consistency.value}")
    if report.kd_violations is not None:
        click.echo(f"% kds={'violated' if report.kd_violations else 'satisfied'}")
        for name in report.kd_violations:
            click.echo(f"%   {name}")


@cli.command()
@_ontology_option
@_query_options
@click.option('--max-rounds', envvar='MAX_ROUNDS', type=click.IntRange(min=1), default=Config.DEFAULT_MAX_ROUNDS)
@click.pass_context
def explain(ctx, ontology, query_path, query_name, max_rounds):
    """Rewrite with tracing and print how each output CQ was derived."""
    compiled, query = _load(ontology, query_path, query_name)
    options = resolve_options(compiled, max_rounds=max_rounds, trace=True)
    result = run_rewrite(compiled, query, options)
    for cq in result.queries:
        click.echo(str(cq))
        for entry in result.derivation(cq):
            source = f" by {entry.tgd}" if entry.tgd else ''
            click.echo(f"  <- {entry.kind}{source}: {entry.query}")
    click.echo(f"% rounds={result.rounds} explored={result.explored} complete={str(result.complete).lower()}")
    if not result.complete:
        ctx.exit(EXIT_INCOMPLETE)


def run_cli(args=None):
    """Run one command and return its exit status instead of exiting."""
    load_dotenv()
    try:
        status = cli.main(args=args, prog_name='ontorew', standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except click.Abort:
        click.echo('aborted', err=True)
        return EXIT_ERROR
    except TerminationError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_REFUSED
    except (EngineError, OSError) as exc:
        logger.debug("command failed", exc_info=True)
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    return status if isinstance(status, int) else EXIT_OK


def main():
    sys.exit(run_cli())


if __name__ == '__main__':
    main()
