"""Fetch sentence embeddings from the sidecar service instead of hashing.

Start the service first (see embed_service/):

    EMBED_SERVICE_ADDR=127.0.0.1:8876 embed-service

then run: python3 demos/06_remote_embeddings.py
"""

import os

import numpy as np
import requests

from quintlink.embedding import RemoteEmbedder

endpoint = f"http://{os.environ.get('EMBED_SERVICE_ADDR', '127.0.0.1:8876')}"
try:
    requests.get(f"{endpoint}/healthz", timeout=2)
except requests.RequestException:
    raise SystemExit(f"no embedding service at {endpoint}; start embed-service first")

for entry in requests.get(f"{endpoint}/models", timeout=5).json():
    backend = entry["backend"] or "not loaded yet"
    print(f"{entry['model']:40s} dim={entry['dim']:4d} backend={backend}")

client = RemoteEmbedder(endpoint, "all-MiniLM-L6-v2")
sentences = [
    "Company Acme supplies Fuel Tank to company Orion Motors",
    "Company Acme supplies Fuel Pump to company Orion Motors",
    "Company Kaito Parts with certificate ISO9001 has Brake Disc",
]
vectors = client.embed(sentences)
print(f"\nembedded {len(sentences)} sentences at dim {client.dim}")
print("pairwise cosine similarities:")
sims = vectors @ vectors.T
for i, row in enumerate(sims):
    print(" ", np.round(row, 3), f"<- {sentences[i][:46]}...")
