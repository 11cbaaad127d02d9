import io
import json

import numpy as np
import pytest
from PIL import Image

from tissuemaps import (
    NI,
    CodecError,
    LayerGrid,
    LayerKind,
    TissueMap,
    TissueMapsError,
    decode,
    encode,
    load,
    lut,
    new_map,
    palette_image,
    render_layer,
    save,
)
from helpers import make_profile, map_from_grids, random_map


class TestLayerGrid:
    def test_requires_uint8_2d(self):
        with pytest.raises(TissueMapsError):
            LayerGrid(np.zeros((4, 4), dtype=np.int32))
        with pytest.raises(TissueMapsError):
            LayerGrid(np.zeros((4, 4, 3), dtype=np.uint8))

    def test_read_only(self):
        grid = LayerGrid.filled(4, 4)
        with pytest.raises(ValueError):
            grid.values[0, 0] = 1

    def test_content_equality(self):
        a = LayerGrid.from_array(np.arange(16, dtype=np.uint8).reshape(4, 4))
        b = LayerGrid.from_array(np.arange(16, dtype=np.uint8).reshape(4, 4))
        assert a == b
        assert hash(a) == hash(b)


class TestNewMap:
    def test_all_ni(self):
        tmap = new_map(10, 5, (100, 50), "w1")
        assert tmap.width == 10 and tmap.height == 5
        assert (tmap.source.values == NI).all()
        assert (tmap.tissue.values == NI).all()
        assert (tmap.alteration.values == NI).all()
        assert tmap.scale == 0.1

    def test_side_cap(self):
        with pytest.raises(TissueMapsError, match="4096"):
            new_map(5000, 100, (5000, 100), "w1")

    def test_scale_consistency_enforced(self):
        grid = LayerGrid.filled(10, 10)
        with pytest.raises(TissueMapsError, match="scale"):
            TissueMap("w", grid, grid, grid, wsi_width=100, wsi_height=100, scale=0.5)

    def test_layer_dims_must_match(self):
        with pytest.raises(TissueMapsError, match="differ"):
            TissueMap(
                "w",
                LayerGrid.filled(10, 10),
                LayerGrid.filled(10, 11),
                LayerGrid.filled(10, 10),
                wsi_width=10,
                wsi_height=10,
                scale=1.0,
            )


class TestCodec:
    def test_round_trip_random_maps(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            w = int(rng.integers(1, 40))
            h = int(rng.integers(1, 40))
            tmap = random_map(rng, w, h, wsi_id=f"w{w}x{h}")
            png, sidecar = encode(tmap)
            assert decode(png, sidecar) == tmap

    def test_channel_packing(self):
        rng = np.random.default_rng(11)
        tmap = random_map(rng, 9, 6)
        png, _ = encode(tmap)
        rgb = np.asarray(Image.open(io.BytesIO(png)))
        assert (rgb[:, :, 1] == tmap.source.values).all()  # G
        assert (rgb[:, :, 2] == tmap.tissue.values).all()  # B
        assert (rgb[:, :, 0] == tmap.alteration.values).all()  # R

    def test_sidecar_fields(self):
        tmap = new_map(8, 4, (80, 40), "slide-1", microns_per_pixel=0.25)
        _, sidecar = encode(tmap)
        assert sidecar["wsi_id"] == "slide-1"
        assert (sidecar["width"], sidecar["height"]) == (8, 4)
        assert sidecar["scale"] == 0.1
        assert sidecar["microns_per_pixel"] == 0.25
        assert "profile_hashes" in sidecar

    def test_decode_rejects_bad_format(self):
        tmap = new_map(4, 4, (4, 4), "w")
        png, sidecar = encode(tmap)
        bad = dict(sidecar, format="something-else")
        with pytest.raises(CodecError):
            decode(png, bad)

    def test_decode_rejects_bad_version(self):
        tmap = new_map(4, 4, (4, 4), "w")
        png, sidecar = encode(tmap)
        with pytest.raises(CodecError):
            decode(png, dict(sidecar, version=99))

    def test_decode_rejects_missing_hashes(self):
        tmap = new_map(4, 4, (4, 4), "w")
        png, sidecar = encode(tmap)
        del sidecar["profile_hashes"]
        with pytest.raises(CodecError, match="profile_hashes"):
            decode(png, sidecar)

    def test_decode_rejects_dim_mismatch(self):
        tmap = new_map(4, 4, (4, 4), "w")
        png, sidecar = encode(tmap)
        with pytest.raises(CodecError, match="sidecar says"):
            decode(png, dict(sidecar, width=5))

    def test_decode_rejects_non_rgb(self):
        buf = io.BytesIO()
        Image.new("L", (4, 4)).save(buf, format="PNG")
        tmap = new_map(4, 4, (4, 4), "w")
        _, sidecar = encode(tmap)
        with pytest.raises(CodecError, match="RGB"):
            decode(buf.getvalue(), sidecar)


class TestSaveLoad:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        tmap = random_map(rng, 12, 7, wsi_id="disk")
        path = save(tmap, tmp_path / "m.png")
        assert load(path) == tmap
        sidecar = json.loads((tmp_path / "m.json").read_text())
        assert sidecar["wsi_id"] == "disk"

    def test_missing_sidecar(self, tmp_path):
        rng = np.random.default_rng(3)
        save(random_map(rng, 4, 4), tmp_path / "m.png")
        (tmp_path / "m.json").unlink()
        with pytest.raises(CodecError, match="sidecar"):
            load(tmp_path / "m.png")


class TestRender:
    def setup_method(self):
        self.profile = make_profile(["5,-1,C50,#000037,#000037,Breast,,,"])
        grid = np.full((2, 3), 5, dtype=np.uint8)
        self.tmap = map_from_grids(grid, grid, grid)

    def test_alpha_one_is_pure_lut(self):
        rgb = render_layer(self.tmap, LayerKind.TISSUE, self.profile, alpha=1.0)
        assert (rgb == (0, 0, 0x37)).all()

    def test_no_base_behaves_as_opaque(self):
        base_free = render_layer(self.tmap, LayerKind.TISSUE, self.profile, alpha=0.3)
        opaque = render_layer(self.tmap, LayerKind.TISSUE, self.profile, alpha=1.0)
        assert (base_free == opaque).all()

    def test_alpha_zero_returns_base(self):
        rng = np.random.default_rng(5)
        base = rng.integers(0, 256, size=(2, 3, 3)).astype(np.uint8)
        rgb = render_layer(self.tmap, LayerKind.TISSUE, self.profile, 0.0, base)
        assert (rgb == base).all()

    def test_half_alpha_blend_rounds_half_up(self):
        base = np.full((2, 3, 3), 255, dtype=np.uint8)
        rgb = render_layer(self.tmap, LayerKind.TISSUE, self.profile, 0.5, base)
        # 0.5*(0,0,55) + 0.5*(255,255,255) = (127.5, 127.5, 155) -> (128, 128, 155)
        assert (rgb == (128, 128, 155)).all()

    def test_alpha_out_of_range(self):
        with pytest.raises(TissueMapsError, match="alpha"):
            render_layer(self.tmap, LayerKind.TISSUE, self.profile, alpha=1.5)

    def test_base_shape_mismatch(self):
        base = np.zeros((3, 3, 3), dtype=np.uint8)
        with pytest.raises(TissueMapsError, match="base"):
            render_layer(self.tmap, LayerKind.TISSUE, self.profile, 0.5, base)

    def test_profile_hash_checked_when_recorded(self):
        other = make_profile(["5,-1,C50,#FFFFFF,#FFFFFF,Breast,,,"])
        tmap = map_from_grids(
            self.tmap.source.values,
            self.tmap.tissue.values,
            self.tmap.alteration.values,
            profile_hashes={"tissue": self.profile.content_hash},
        )
        with pytest.raises(TissueMapsError, match="hash"):
            render_layer(tmap, LayerKind.TISSUE, other)
        rgb = render_layer(tmap, LayerKind.TISSUE, self.profile)
        assert rgb.shape == (2, 3, 3)


class TestPaletteImage:
    def test_ids_and_palette_preserved(self, tissue_profile):
        grid = LayerGrid.from_array(
            np.array([[0, 9], [12, 9]], dtype=np.uint8)
        )
        png = palette_image(grid, tissue_profile)
        image = Image.open(io.BytesIO(png))
        assert image.mode == "P"
        assert (np.asarray(image) == grid.values).all()
        palette = image.getpalette()
        table = lut(tissue_profile)
        for slot in (0, 9, 12, 255):
            assert tuple(palette[slot * 3 : slot * 3 + 3]) == tuple(table[slot])
