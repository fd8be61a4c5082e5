"""Protocol conformance: the primary client against the reference server."""

import base64
import concurrent.futures
import json

import numpy as np
import pytest
import requests

from qrefine.backends.remote import (
    BackendEndpoint,
    EnhanceRequest,
    InpaintRequest,
    RemoteBackend,
    enhance_remote,
    health_check,
    inpaint_remote,
)
from qrefine.corpus import make_clean_image
from qrefine.imaging import decode_image, encode_gray_png, encode_png
from qrefine.iqa import ScorerConfig, score_cells
from qrefine.restore import builtin_harmonic_inpaint

from qrefine_backend import ServerConfig, ServerThread


@pytest.fixture(scope="module")
def server():
    with ServerThread(ServerConfig(port=0)) as srv:
        yield srv


@pytest.fixture(scope="module")
def endpoint(server):
    return BackendEndpoint(base_url=server.url, timeout=30.0)


@pytest.fixture()
def ramp_image():
    w = 48
    ramp = np.tile(np.linspace(0.05, 0.95, w, dtype=np.float32), (40, 1))
    return np.stack([ramp] * 3, axis=2)


class TestHealth:
    def test_health_round_trip(self, endpoint):
        assert health_check(endpoint) == "reference-classical"

    def test_unknown_route_is_404_with_error_body(self, server):
        resp = requests.get(server.url + "/v1/nope", timeout=10)
        assert resp.status_code == 404
        assert "error" in resp.json()


class TestInpaintRoute:
    def _request(self, img, mask, strength=1.0, prompt="p"):
        return InpaintRequest(
            image=encode_png(img),
            mask=encode_gray_png(mask.astype(np.float32)),
            prompt=prompt,
            strength=strength,
            steps=8,
            seed=3,
        )

    def test_zero_mask_echo_is_byte_exact(self, endpoint, ramp_image):
        req = self._request(ramp_image, np.zeros(ramp_image.shape[:2]))
        result = inpaint_remote(endpoint, req)
        np.testing.assert_array_equal(result, decode_image(req.image, min_size=1))

    def test_zero_strength_echo_is_byte_exact(self, endpoint, ramp_image):
        mask = np.zeros(ramp_image.shape[:2])
        mask[10:20, 10:20] = 1.0
        req = self._request(ramp_image, mask, strength=0.0)
        result = inpaint_remote(endpoint, req)
        np.testing.assert_array_equal(result, decode_image(req.image, min_size=1))

    def test_unmasked_pixels_preserved_exactly(self, endpoint, ramp_image):
        mask = np.zeros(ramp_image.shape[:2])
        mask[12:22, 14:30] = 1.0
        req = self._request(ramp_image, mask)
        result = inpaint_remote(endpoint, req)
        source = decode_image(req.image, min_size=1)
        untouched = mask == 0.0
        np.testing.assert_array_equal(result[untouched], source[untouched])

    def test_hole_in_ramp_matches_client_side_harmonic_solver(self, endpoint, ramp_image):
        mask = np.zeros(ramp_image.shape[:2], dtype=bool)
        mask[14:24, 18:28] = True
        req = self._request(ramp_image, mask, strength=1.0)
        result = inpaint_remote(endpoint, req)
        source = decode_image(req.image, min_size=1)
        oracle = builtin_harmonic_inpaint(source, mask)
        assert np.abs(result - oracle).max() <= 2 / 255

    def test_dimension_mismatch_returns_400(self, server, ramp_image):
        body = {
            "image": base64.b64encode(encode_png(ramp_image)).decode(),
            "mask": base64.b64encode(
                encode_gray_png(np.zeros((8, 8), dtype=np.float32))
            ).decode(),
            "prompt": "",
            "strength": 1.0,
            "steps": 5,
            "seed": 0,
        }
        resp = requests.post(server.url + "/v1/inpaint", json=body, timeout=10)
        assert resp.status_code == 400
        assert "dimensions differ" in resp.json()["error"]

    def test_unknown_fields_ignored(self, server, ramp_image):
        mask = np.zeros(ramp_image.shape[:2], dtype=np.float32)
        body = {
            "image": base64.b64encode(encode_png(ramp_image)).decode(),
            "mask": base64.b64encode(encode_gray_png(mask)).decode(),
            "prompt": "",
            "strength": 0.0,
            "steps": 5,
            "seed": 0,
            "some_future_knob": {"nested": True},
        }
        resp = requests.post(server.url + "/v1/inpaint", json=body, timeout=10)
        assert resp.status_code == 200
        assert "image" in resp.json()


class TestEnhanceRoute:
    def test_zero_strength_echo(self, endpoint, ramp_image):
        req = EnhanceRequest(
            image=encode_png(ramp_image), prompt="ignored", strength=0.0, steps=5, seed=1
        )
        result = enhance_remote(endpoint, req)
        np.testing.assert_array_equal(result, decode_image(req.image, min_size=1))

    def test_full_strength_raises_scorer_cells_on_blurred_texture(self, endpoint):
        from scipy import ndimage

        img = make_clean_image(33, 128, 128)
        blurred = np.clip(
            ndimage.gaussian_filter(img, sigma=(1.5, 1.5, 0.0), mode="nearest"), 0, 1
        ).astype(np.float32)
        req = EnhanceRequest(
            image=encode_png(blurred), prompt="", strength=1.0, steps=5, seed=1
        )
        result = enhance_remote(endpoint, req)
        cfg = ScorerConfig(n=4, cells_per_patch_side=2)
        assert score_cells(result, cfg).mean() > score_cells(blurred, cfg).mean()

    def test_concurrent_identical_requests_are_identical_bytes(self, server, ramp_image):
        body = json.dumps(
            {
                "image": base64.b64encode(encode_png(ramp_image)).decode(),
                "prompt": "",
                "strength": 0.6,
                "steps": 5,
                "seed": 42,
            }
        ).encode()

        def call():
            return requests.post(
                server.url + "/v1/enhance",
                data=body,
                headers={"Content-Type": "application/json"},
                timeout=30,
            ).content

        with concurrent.futures.ThreadPoolExecutor(max_workers=4) as pool:
            blobs = list(pool.map(lambda _: call(), range(4)))
        assert all(blob == blobs[0] for blob in blobs)


class TestErrorHandling:
    def test_malformed_body_returns_400(self, server):
        resp = requests.post(
            server.url + "/v1/enhance",
            data=b"this is not json",
            headers={"Content-Type": "application/json"},
            timeout=10,
        )
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_missing_field_returns_400(self, server):
        resp = requests.post(server.url + "/v1/enhance", json={"strength": 0.5}, timeout=10)
        assert resp.status_code == 400

    def test_oversized_payload_returns_413(self, ramp_image):
        with ServerThread(ServerConfig(port=0, max_payload=100)) as small:
            req = EnhanceRequest(
                image=encode_png(ramp_image), prompt="", strength=0.5, steps=5, seed=1
            )
            resp = requests.post(
                small.url + "/v1/enhance",
                data=req.to_json().encode(),
                headers={"Content-Type": "application/json"},
                timeout=10,
            )
            assert resp.status_code == 413
            assert "error" in resp.json()

    def test_strength_out_of_range_returns_400(self, server, ramp_image):
        body = {
            "image": base64.b64encode(encode_png(ramp_image)).decode(),
            "prompt": "",
            "strength": 1.5,
            "steps": 5,
            "seed": 0,
        }
        resp = requests.post(server.url + "/v1/enhance", json=body, timeout=10)
        assert resp.status_code == 400


class TestPipelineOverRemote:
    def test_full_pipeline_runs_through_reference_backend(self, endpoint):
        from qrefine.corpus import build_corpus
        from qrefine.stages import RefineConfig, run_pipeline

        item = build_corpus(count=1, size=128, seed=13)[0]
        backend = RemoteBackend(endpoint)
        assert backend.check() == "reference-classical"
        refined, report = run_pipeline(item.degraded, "a mosaic", RefineConfig(seed=5), backend)
        assert refined.shape == item.degraded.shape
        assert report.record_for(2).backend == "reference-classical"

    def test_generative_mode_reports_missing_dependencies(self):
        from qrefine_backend.server import build_server

        try:
            import diffusers  # noqa: F401

            pytest.skip("diffusers installed; error path not reachable")
        except ImportError:
            pass
        with pytest.raises(RuntimeError, match="generative"):
            build_server(ServerConfig(port=0, mode="generative"))
