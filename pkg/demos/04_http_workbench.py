"""Drive the full annotation workbench over its HTTP API.

Starts the service in a subprocess, uploads the model and dataset,
opens an annotation session, and walks the session -> document ->
generate -> rate -> risk loop a web frontend would perform.
"""

import json
import socket
import subprocess
import sys
import tempfile
import time

import httpx

import toy


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def main():
    model = toy.train_model()
    port = free_port()
    with tempfile.TemporaryDirectory() as workdir:
        server = subprocess.Popen(
            [sys.executable, "-m", "cfrisk.cli", "serve",
             "--port", str(port), "--data-dir", workdir],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
        )
        try:
            client = httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=10.0)
            for _ in range(100):
                try:
                    client.get("/health")
                    break
                except httpx.TransportError:
                    time.sleep(0.1)

            weights = json.loads(
                json.dumps({
                    "labels": list(model.label_set),
                    "vocabulary": list(model.vocabulary),
                    "embedding_dim": model.embedding_dim,
                    "embeddings": model._emb.tolist(),
                    "class_weights": model._weights.tolist(),
                })
            )
            model_id = client.post(
                "/models", json={"kind": "ref:linear", "weights": weights}
            ).json()["model_id"]
            print("uploaded model:", model_id)

            body = "\n".join(json.dumps(r.to_dict()) for r in toy.records())
            dataset_id = client.post("/datasets", content=body.encode()).json()["dataset_id"]
            print("uploaded dataset:", dataset_id)

            session = client.post("/sessions", json={
                "annotator_id": "demo-annotator",
                "model_id": model_id,
                "dataset_id": dataset_id,
                "seed": 4,
            }).json()
            sid = session["session_id"]
            print(f"session {sid} looks at instance {session['instance_id']}")

            doc = client.get(f"/sessions/{sid}/document").json()
            bold = [t for t, b in zip(doc["tokens"], doc["mask"]) if b]
            print("document:", " ".join(doc["tokens"]))
            print("rationale (bold in the UI):", bold)
            print("sentences offered for inspection:", doc["rationale_sentences"])

            sentence = doc["rationale_sentences"][0]
            gen = client.post(f"/sessions/{sid}/counterfactuals", json={
                "sentence_index": sentence, "method": "hotflip",
            }).json()
            trail = gen["trail"]
            print("\ncounterfactual trail:")
            print("  ", " ".join(gen["sentence_tokens"]), "->", trail["original_prediction"])
            print("  ", " ".join(gen["counterfactual_tokens"]), "->", trail["final_prediction"])

            client.post(f"/sessions/{sid}/ratings", json={
                "trail_id": trail["trail_id"],
                "plausibility": 4, "meaningfulness": 4, "faithfulness": 2,
            })
            risk = client.get("/risk", params={"model_id": model_id}).json()
            print(f"\nrisk after one rating: {risk['aggregate']:.2f}"
                  f" from {risk['total_count']} rated counterfactual(s)")
        finally:
            server.terminate()
            server.wait(timeout=10)


if __name__ == "__main__":
    main()
