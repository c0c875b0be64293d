"""
Ontology import script with upsert logic (safe to rerun)
Usage:
python scripts/import_ontologies.py data/ontologies
python scripts/import_ontologies.py stock_exchange.dl other.dl

Each file is stored under its stem; re-importing a changed file clears its cached rewritings.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from dotenv import load_dotenv

load_dotenv()

from app import create_app  # noqa: E402
from app.extensions import db  # noqa: E402
from app.models import Ontology, RewriteCache  # noqa: E402
from app.config import Config  # noqa: E402
from app.engine.errors import EngineError  # noqa: E402
from app.engine.pipeline import compile_text  # noqa: E402


def collect_files(paths):
    files = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(path.glob('*.dl')))
        elif path.exists():
            files.append(path)
        else:
            print(f"Error: File not found: {raw}")
            sys.exit(1)
    return files


def import_ontologies(paths, config=Config):
    """Parse and upsert every ontology file; returns (imported, updated, skipped)"""
    app = create_app(config)

    with app.app_context():
        imported = 0
        updated = 0
        skipped = 0

        for path in collect_files(paths):
            text = path.read_text(encoding='utf-8')
            try:
                compiled = compile_text(text)
            except EngineError as e:
                print(f"Skipping {path}: {e}")
                skipped += 1
                continue

            existing = Ontology.query.filter_by(name=path.stem).first()
            if existing:
                if existing.text == text:
                    continue
                RewriteCache.query.filter_by(ontology_id=existing.id).delete()
                record = existing
                updated += 1
            else:
                record = Ontology(name=path.stem)
                db.session.add(record)
                imported += 1
            record.text = text
            record.linear = compiled.report.linear
            record.sticky = compiled.report.sticky
            record.tgd_count = len(compiled.program.tgds)

        try:
            db.session.commit()
            print(f"Imported {imported} new ontologies, updated {updated} existing ontologies ({skipped} skipped)")
        except Exception as e:
            db.session.rollback()
            print(f"Error: {e}")
            sys.exit(1)
        return imported, updated, skipped


def main():
    """Parse command-line arguments and run import"""
    if len(sys.argv) < 2:
        print("Usage: python scripts/import_ontologies.py <file.dl|directory> ...")
        sys.exit(1)

    import_ontologies(sys.argv[1:])


if __name__ == '__main__':
    main()
