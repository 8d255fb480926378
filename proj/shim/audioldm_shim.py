# Copyright 2026 The synthcap Authors
# SPDX-License-Identifier: Apache-2.0
"""HTTP shim exposing a text-to-audio latent diffusion model over the
generation protocol spoken by `synthcap synthesize --backend http`.

    POST /v1/generate  {"caption": str, "duration_s": number, "seed": int?}
        -> 200 {"sample_rate": 16000, "format": "wav", "audio_b64": str}
    GET  /v1/health    -> 200 {"status": "loading" | "ok" | "error", "backend": str}
"""

import argparse
import base64
import io
import json
import math
import threading
import wave
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

SAMPLE_RATE = 16000


class AudioLDMBackend:
    """Wraps the `audioldm` package. It emits audio in 2.5 s chunks, so we
    generate the next chunk multiple above the request and trim the tail."""

    chunk_s = 2.5

    def __init__(self, model_version):
        self.name = model_version
        self.model = None

    def load(self):
        from audioldm import build_model  # heavy import, deferred on purpose

        self.model = build_model(model_name=self.name)

    def generate(self, caption, duration_s, seed):
        from audioldm import text_to_audio

        padded = self.chunk_s * math.ceil(duration_s / self.chunk_s)
        wave_out = text_to_audio(
            self.model,
            caption,
            seed=0 if seed is None else seed,
            duration=padded,
            batchsize=1,
        )
        samples = [float(x) for x in wave_out.reshape(-1)]
        # text_to_audio returns int16-scaled floats in some releases
        if samples and max(abs(x) for x in samples) > 1.0:
            samples = [x / 32768.0 for x in samples]
        return fit_length(samples, duration_s)


class FakeBackend:
    """Deterministic tone used to exercise the protocol without model weights."""

    def __init__(self, load_delay_s=0.0):
        self.name = "fake"
        self.load_delay_s = load_delay_s

    def load(self):
        if self.load_delay_s:
            threading.Event().wait(self.load_delay_s)

    def generate(self, caption, duration_s, seed):
        n = round(duration_s * SAMPLE_RATE)
        hz = 200 + (sum(caption.encode("utf-8")) + (seed or 0)) % 1800
        return [0.5 * math.sin(2 * math.pi * hz * i / SAMPLE_RATE) for i in range(n)]


def fit_length(samples, duration_s):
    n = round(duration_s * SAMPLE_RATE)
    return samples[:n] + [0.0] * max(0, n - len(samples))


def encode_wav(samples):
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(SAMPLE_RATE)
        frames = bytearray()
        for x in samples:
            v = max(-1.0, min(1.0, x))
            frames += int(round(v * 32767)).to_bytes(2, "little", signed=True)
        w.writeframes(bytes(frames))
    return buf.getvalue()


def validate(body):
    """Returns (request, errors) for a decoded JSON body."""
    errors = []
    if not isinstance(body, dict):
        return None, ["body: must be a JSON object"]
    caption = body.get("caption")
    if not isinstance(caption, str):
        errors.append("caption: required string")
    elif not any(ch.isalnum() for ch in caption):
        errors.append("caption: must be non-empty")
    duration = body.get("duration_s")
    if isinstance(duration, bool) or not isinstance(duration, (int, float)):
        errors.append("duration_s: required number")
    elif not duration > 0:
        errors.append("duration_s: must be positive")
    seed = body.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        errors.append("seed: must be an integer")
    if errors:
        return None, errors
    return {"caption": caption, "duration_s": float(duration), "seed": seed}, []


class Shim:
    def __init__(self, backend):
        self.backend = backend
        self.ready = threading.Event()
        self.load_error = None
        self.inference = threading.Lock()  # one generation at a time

    def load_async(self):
        def run():
            try:
                self.backend.load()
            except Exception as e:  # surfaced through /v1/generate
                self.load_error = str(e)
            self.ready.set()

        threading.Thread(target=run, daemon=True).start()

    def health(self):
        if not self.ready.is_set():
            return 200, {"status": "loading", "backend": self.backend.name}
        if self.load_error:
            return 200, {"status": "error", "backend": self.backend.name, "error": self.load_error}
        return 200, {"status": "ok", "backend": self.backend.name}

    def generate(self, raw):
        try:
            body = json.loads(raw)
        except (ValueError, UnicodeDecodeError):
            return 400, {"error": "body is not valid JSON"}
        req, errors = validate(body)
        if errors:
            return 400, {"error": "invalid generation request", "fields": errors}
        if not self.ready.is_set() or self.load_error:
            return 503, {"error": self.load_error or "model is loading"}
        try:
            with self.inference:
                samples = self.backend.generate(req["caption"], req["duration_s"], req["seed"])
        except Exception as e:
            return 500, {"error": f"inference failed: {e}"}
        return 200, {
            "sample_rate": SAMPLE_RATE,
            "format": "wav",
            "audio_b64": base64.b64encode(encode_wav(samples)).decode("ascii"),
        }


def make_handler(shim):
    class Handler(BaseHTTPRequestHandler):
        def reply(self, status, doc):
            data = json.dumps(doc).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path == "/v1/health":
                self.reply(*shim.health())
            else:
                self.reply(404, {"error": "not found"})

        def do_POST(self):
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length)
            if self.path == "/v1/generate":
                self.reply(*shim.generate(raw))
            else:
                self.reply(404, {"error": "not found"})

        def log_message(self, fmt, *args):
            pass

    return Handler


def serve(backend, host, port, on_bound=None):
    shim = Shim(backend)
    server = ThreadingHTTPServer((host, port), make_handler(shim))
    shim.load_async()
    if on_bound:
        on_bound(server.server_address[1])
    server.serve_forever()


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--model-version", default="audioldm-l-full")
    p.add_argument("--backend", choices=["audioldm", "fake"], default="audioldm")
    p.add_argument("--fake-load-delay", type=float, default=0.0, help="seconds the fake backend pretends to load")
    args = p.parse_args(argv)
    backend = AudioLDMBackend(args.model_version) if args.backend == "audioldm" else FakeBackend(args.fake_load_delay)
    serve(backend, args.host, args.port, on_bound=lambda port: print(f"listening on {args.host}:{port}", flush=True))


if __name__ == "__main__":
    main()
