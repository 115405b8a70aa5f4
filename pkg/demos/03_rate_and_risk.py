"""From human ratings to a model risk score, plus the dataset export.

Each annotator rates the counterfactuals they saw on plausibility,
meaningfulness, and faithfulness (all 1-5). An annotator's risk is the
mean shortfall of faithfulness from 5; annotators are then averaged
weighted by how many counterfactuals they rated. Rated trails are
exported as a training-quality counterfactual dataset.
"""

import json
import tempfile
from pathlib import Path

from cfrisk import GenerationConfig, Rating, Store, generate_trail
from cfrisk.rationale import instance_from_record
from cfrisk.risk import risk_report

import toy


def main():
    model = toy.train_model()
    records = toy.records()

    with tempfile.TemporaryDirectory() as workdir:
        dataset_path = Path(workdir) / "reviews.jsonl"
        dataset_path.write_text(
            "\n".join(json.dumps(r.to_dict()) for r in records) + "\n"
        )
        store = Store(Path(workdir) / "data")
        store.ingest_dataset(dataset_path)

        trails = []
        for record in records[:4]:
            instance = instance_from_record(record, model, ratio=0.4)
            trail = generate_trail(
                instance, 0, GenerationConfig(), model, model_id="demo-model"
            )
            store.save_trail(trail)
            trails.append(trail)

        # ann-a finds the counterfactuals faithful, ann-b does not
        scores = {"ann-a": [5, 4, 5, 4], "ann-b": [2, 1, 3, 2]}
        for annotator, faithfulness in scores.items():
            for trail, f in zip(trails, faithfulness):
                store.save_rating(Rating(
                    rating_id=store.next_rating_id(),
                    trail_id=trail.trail_id,
                    annotator_id=annotator,
                    plausibility=4,
                    meaningfulness=4,
                    faithfulness=f,
                    timestamp="2024-06-01T12:00:00+00:00",
                ))

        report = risk_report(store, "demo-model")
        print("per-annotator risk (0 = always faithful, 4 = never):")
        for a in report.per_annotator:
            print(f"  {a.annotator_id}: risk={a.risk:.2f} over {a.count} counterfactuals")
        print(f"count-weighted aggregate: {report.aggregate:.3f}\n")

        print("exported counterfactual dataset (plausibility >= 4, flipped only):")
        for row in store.export_counterfactuals(min_plausibility=4, flipped_only=True):
            print(f"  {row['original']!r} -> {row['counterfactual']!r}"
                  f" [{row['orig_pred']} -> {row['final_pred']}]"
                  f" f={row['faithfulness']} by {row['annotator_id']}")


if __name__ == "__main__":
    main()
