import click
import sys
import os
from functools import wraps
from pathlib import Path
from dotenv import load_dotenv

# Add the project root to Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from mog.models.errors import MogError
from mog.models.graph_entities import MixedGraph, SeparationQuery
from mog.models.mcar_entities import BrownianDriver, CompoundPoissonDriver
from mog.services.empirical import assumption_reports
from mog.services.graph_builder import (
    local_orthogonality_graph,
    orthogonality_graph,
    ou_orthogonality_graph,
    sampled_graph,
)
from mog.services.graph_serializer import GraphSerializer, load_graph_file
from mog.services.mcar_model import build_state_space, load_model_file, reference_model, validate_model
from mog.services.mixed_graph import (
    implied_statements,
    m_separated,
    m_separated_oracle,
    markov_readout,
    pairwise_statements,
)
from mog.services.simulator import simulate_replications, write_path_csv
from mog.utils.logger import get_logger

load_dotenv()

# Expected edge lists for the model built by reference_model()
REFERENCE_OG = ["D 1 2", "D 1 3", "D 2 3", "D 3 2", "U 1 2", "U 1 3", "U 2 3"]
REFERENCE_LOCAL = ["D 1 3", "D 2 3", "D 3 2", "U 1 3"]


def handle_domain_errors(func):
    """Report MogError on stderr and exit with code 1."""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except MogError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(1)
    return wrapper


def parse_vertex_set(ctx, param, value):
    """'1,2,3' -> frozenset({1, 2, 3}); empty string -> empty set."""
    if value is None or not value.strip():
        return frozenset()
    try:
        return frozenset(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated vertex numbers, got {value!r}")


def parse_driver(value: str, sigma_L):
    """
    'brownian' or 'cpoisson:<rate>'; the compound Poisson jump covariance is
    sigma_L / rate so that the driver matches the model.
    """
    if value == "brownian":
        return BrownianDriver(cov=sigma_L)
    if value.startswith("cpoisson:"):
        try:
            rate = float(value.split(":", 1)[1])
        except ValueError:
            raise click.BadParameter(f"invalid jump rate in {value!r}", param_hint="--driver")
        if rate <= 0:
            raise click.BadParameter("jump rate must be positive", param_hint="--driver")
        jump_cov = [[entry / rate for entry in row] for row in sigma_L]
        return CompoundPoissonDriver(rate=rate, jump_cov=jump_cov)
    raise click.BadParameter(f"expected 'brownian' or 'cpoisson:<rate>', got {value!r}", param_hint="--driver")


@click.group()
def cli():
    """MCAR orthogonality graphs: edge criteria, separation queries, simulation and checks."""
    pass


@cli.command()
@click.argument('model', type=click.Path(dir_okay=False))
@handle_domain_errors
def validate(model):
    """Print dimension, order, stability margin and the smallest eigenvalue of sigma_L."""
    logger = get_logger(__name__, command_name='validate')
    spec = load_model_file(model)
    result = validate_model(spec)
    click.echo(f"k: {result.k}")
    click.echo(f"p: {result.p}")
    click.echo(f"stability_margin: {result.margin:.12g}")
    click.echo(f"sigma_min_eig: {result.sigma_min_eig:.12g}")
    click.echo(f"causal: {'true' if result.causal else 'false'}")
    click.echo(f"strict: {'true' if result.strict_ok else 'false'}")
    logger.info(f"validate {model}: causal={result.causal}, strict={result.strict_ok}")
    if not result.ok:
        sys.exit(1)


@cli.command()
@click.argument('model', type=click.Path(dir_okay=False))
@click.option('--kind', default='og', type=click.Choice(['og', 'local', 'ou', 'sampled']), help='Edge criterion (default: og)')
@click.option('--h', 'h', type=float, help='Sampling step, required for --kind sampled')
@click.option('--tol', default=os.getenv("MOG_EDGE_TOLERANCE", "1e-9"), type=float, help='Numerical zero tolerance')
@click.option('--out', 'out_format', default='edges', type=click.Choice(['edges', 'dot']), help='Output format (default: edges)')
@click.option('--output-file', type=click.Path(dir_okay=False), help='Write to a file instead of stdout')
@click.option('--general-order', is_flag=True, help='Experimental sampled graph for p > 1')
@handle_domain_errors
def graph(model, kind, h, tol, out_format, output_file, general_order):
    """Compute a (local / OU / sampled) orthogonality graph from a model file."""
    logger = get_logger(__name__, command_name='graph')
    spec = load_model_file(model)

    if kind == 'og':
        report = orthogonality_graph(spec, tol)
    elif kind == 'local':
        report = local_orthogonality_graph(spec, tol)
    elif kind == 'ou':
        report = ou_orthogonality_graph(spec, tol)
    else:
        if h is None:
            raise click.UsageError("--h is required for --kind sampled")
        report = sampled_graph(spec, h, tol, general_order=general_order)

    for key, witness in sorted(report.witness.items()):
        logger.debug(f"{key}: index={witness.index} entry={witness.entry:.6g}")

    serializer = GraphSerializer(out_format)
    if output_file:
        serializer.write(report.graph, output_file)
    else:
        click.echo(serializer.serialize(report.graph), nl=False)


def _query(a, b, c) -> SeparationQuery:
    return SeparationQuery(A=a, B=b, C=c)


@cli.command()
@click.argument('graph_file', type=click.Path(dir_okay=False))
@click.option('--a', 'a', required=True, callback=parse_vertex_set, help='Vertex set A, e.g. 1,2')
@click.option('--b', 'b', required=True, callback=parse_vertex_set, help='Vertex set B')
@click.option('--c', 'c', default='', callback=parse_vertex_set, help='Conditioning set C (default: empty)')
@click.option('--oracle', is_flag=True, help='Use brute-force walk enumeration (at most 8 vertices)')
@handle_domain_errors
def msep(graph_file, a, b, c, oracle):
    """Decide A ⋈_m B | C in a mixed graph given as an edge list."""
    G = load_graph_file(graph_file)
    q = _query(a, b, c)
    separated = m_separated_oracle(G, q) if oracle else m_separated(G, q)
    click.echo("SEPARATED" if separated else "CONNECTED")


@cli.command()
@click.argument('graph_file', type=click.Path(dir_okay=False))
@click.option('--kind', default='og', type=click.Choice(['og', 'local']), help='Graph kind (default: og)')
@click.option('--a', 'a', required=True, callback=parse_vertex_set, help='Vertex set A')
@click.option('--b', 'b', required=True, callback=parse_vertex_set, help='Vertex set B')
@click.option('--c', 'c', default='', callback=parse_vertex_set, help='Conditioning set C')
@handle_domain_errors
def implied(graph_file, kind, a, b, c):
    """Print the statements the graph implies for the query."""
    G = load_graph_file(graph_file)
    result = implied_statements(G, _query(a, b, c), kind)
    click.echo(result.render())


@cli.command()
@click.argument('graph_file', type=click.Path(dir_okay=False))
@click.option('--kind', default='og', type=click.Choice(['og', 'local']), help='Graph kind (default: og)')
@click.option('--a', 'a', callback=parse_vertex_set, help='Vertex set A for the block-recursive readout')
@click.option('--pairwise', is_flag=True, help='List every pairwise statement instead')
@handle_domain_errors
def readout(graph_file, kind, a, pairwise):
    """Read Granger non-causality and uncorrelation statements off the graph."""
    G = load_graph_file(graph_file)
    if pairwise:
        statements = pairwise_statements(G, kind)
    else:
        if not a:
            raise click.UsageError("--a is required unless --pairwise is given")
        statements = list(markov_readout(G, a, kind))
    for statement in statements:
        click.echo(statement.render())


@cli.command()
@click.argument('model', type=click.Path(dir_okay=False))
@click.option('--h', 'h', required=True, type=float, help='Grid spacing')
@click.option('--steps', required=True, type=click.IntRange(min=1), help='Number of steps')
@click.option('--seed', default=os.getenv("MOG_SEED", "0"), type=int, help='Base seed (default: MOG_SEED or 0)')
@click.option('--driver', 'driver_spec', default='brownian', help="'brownian' or 'cpoisson:<rate>'")
@click.option('--substeps', default=10, type=click.IntRange(min=1), help='Euler sub-steps per grid step for jump drivers')
@click.option('--replications', default=1, type=click.IntRange(min=1), help='Independent replications, seed = base + i')
@click.option('--workers', default=None, type=int, help='Worker threads for replications (default: CPU count)')
@click.option('--out', 'out_file', required=True, type=click.Path(dir_okay=False), help='CSV output file')
@handle_domain_errors
def simulate(model, h, steps, seed, driver_spec, substeps, replications, workers, out_file):
    """Simulate sample paths and write them as CSV (t, X1..Xkp, Y1..Yk)."""
    logger = get_logger(__name__, command_name='simulate')
    spec = load_model_file(model)
    ss = build_state_space(spec)
    driver = parse_driver(driver_spec, spec.sigma_L)

    paths = simulate_replications(
        ss, h, steps, seed, replications, driver=driver, substeps=substeps, max_workers=workers
    )
    out = Path(out_file)
    for i, path in enumerate(paths):
        target = out if replications == 1 else out.with_name(f"{out.stem}_{i}{out.suffix}")
        write_path_csv(path, target)
        click.echo(f"wrote {path.n_steps + 1} rows to {target}")
        for warning in path.warnings:
            logger.warning(f"replication {i}: {warning}")


@cli.command('check-assumption')
@click.argument('model', type=click.Path(dir_okay=False))
@click.option('--lmax', default=os.getenv("MOG_LAMBDA_MAX", "100"), type=float, help='Grid half-width')
@click.option('--step', default=os.getenv("MOG_LAMBDA_STEP", "0.05"), type=float, help='Grid spacing')
@click.option('--all-splits', is_flag=True, help='Check every ordered disjoint (A, B) pair, not only singleton vs rest')
@handle_domain_errors
def check_assumption(model, lmax, step, all_splits):
    """Check the uniform spectral bound d_AB(λ) < I on a frequency grid."""
    logger = get_logger(__name__, command_name='check-assumption')
    ss = build_state_space(load_model_file(model))
    if ss.k < 2:
        raise click.UsageError("check-assumption needs a model with at least two components")
    reports = assumption_reports(ss, splits='all' if all_splits else 'singleton', lambda_max=lmax, step=step)
    click.echo("\n\n".join(report.to_text() for report in reports))
    failed = [r for r in reports if not r.satisfied]
    logger.info(f"check-assumption: {len(reports) - len(failed)}/{len(reports)} pair(s) satisfied")


def _compare_line(label: str, G: MixedGraph, expected) -> tuple[str, bool]:
    tokens = G.edge_tokens()
    match = tokens == expected
    return f"{label}: {', '.join(tokens)} - {'MATCH' if match else 'MISMATCH'}", match


@cli.command('reproduce-reference')
@click.option('--tol', default=os.getenv("MOG_EDGE_TOLERANCE", "1e-9"), type=float, help='Numerical zero tolerance')
@handle_domain_errors
def reproduce_reference(tol):
    """Rebuild the reference OU example and compare both graphs with the published edge lists."""
    spec = reference_model()
    og_line, og_ok = _compare_line("OG", orthogonality_graph(spec, tol).graph, REFERENCE_OG)
    local_line, local_ok = _compare_line("LOCAL", local_orthogonality_graph(spec, tol).graph, REFERENCE_LOCAL)
    click.echo(og_line)
    click.echo(local_line)
    if not (og_ok and local_ok):
        sys.exit(1)


cli.add_command(reproduce_reference, name='reproduce-figure1')


if __name__ == '__main__':
    cli()
