"""Command-line entry point for the embedding exporter."""

import click

from .export import ExportJob, export_embeddings


@click.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True), help="TSV or JSONL corpus.")
@click.option("--output", "output_path", required=True,
              help="EMB1 file to write.")
@click.option("--model", "model_name", default="bert-base-uncased",
              help="Pretrained model name or local path.")
@click.option("--max-len", "max_length", default=64, show_default=True,
              help="Token positions per row, special tokens included.")
@click.option("--batch-size", "batch_size", default=32, show_default=True)
def main(input_path, output_path, model_name, max_length, batch_size):
    """Export frozen-transformer mean-pooled sentence embeddings."""
    job = ExportJob(input_path=input_path, output_path=output_path,
                    model_name=model_name, max_length=max_length,
                    batch_size=batch_size)
    matrix = export_embeddings(job)
    click.echo(f"wrote {matrix.shape[0]} x {matrix.shape[1]} embeddings "
               f"to {output_path}")


if __name__ == "__main__":
    main()
