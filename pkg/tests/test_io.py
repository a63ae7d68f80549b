import numpy as np
import pytest
from PIL import Image

from hypercal import io, presets
from hypercal.errors import SerializationError
from hypercal.types import DataCube, Spectrum, WavelengthGrid


def random_cube(rng, h=3, w=4, bands=5, unit="digital_counts"):
    grid = WavelengthGrid(600.0 + 7.5 * np.arange(bands))
    return DataCube(
        grid=grid,
        values=rng.uniform(0, 1000, size=(h, w, bands)),
        integration_time=0.5,
        unit=unit,
    )


class TestCubeIO:
    def test_round_trip_is_bit_exact(self, rng, tmp_path):
        cube = random_cube(rng)
        io.write_cube(cube, tmp_path / "cube")
        back = io.read_cube(tmp_path / "cube.hdr")
        assert np.array_equal(back.values, cube.values)
        assert back.grid == cube.grid
        assert back.unit == cube.unit
        assert back.integration_time == cube.integration_time

    def test_written_files_are_deterministic(self, rng, tmp_path):
        cube = random_cube(rng)
        io.write_cube(cube, tmp_path / "a")
        io.write_cube(cube, tmp_path / "b")
        assert (tmp_path / "a.hdr").read_text() == (tmp_path / "b.hdr").read_text()
        assert (tmp_path / "a.raw").read_bytes() == (tmp_path / "b.raw").read_bytes()

    def test_body_size_mismatch_rejected(self, rng, tmp_path):
        cube = random_cube(rng)
        hdr, raw = io.write_cube(cube, tmp_path / "cube")
        hdr.write_text(hdr.read_text().replace("bands = 5", "bands = 4").replace(
            "wavelength = {", "wavelength = { 1.0, 2.0, 3.0, 4.0 } \nignored = {"
        ))
        with pytest.raises(SerializationError, match="body"):
            io.read_cube(tmp_path / "cube.hdr")

    def test_unsupported_interleave_rejected(self, rng, tmp_path):
        cube = random_cube(rng)
        hdr, _ = io.write_cube(cube, tmp_path / "cube")
        hdr.write_text(hdr.read_text().replace("interleave = bsq", "interleave = bil"))
        with pytest.raises(SerializationError, match="interleave"):
            io.read_cube(tmp_path / "cube.hdr")

    def test_big_endian_rejected(self, rng, tmp_path):
        cube = random_cube(rng)
        hdr, _ = io.write_cube(cube, tmp_path / "cube")
        hdr.write_text(hdr.read_text().replace("byte order = 0", "byte order = 1"))
        with pytest.raises(SerializationError, match="byte order"):
            io.read_cube(tmp_path / "cube.hdr")

    def test_missing_magic_rejected(self, tmp_path):
        (tmp_path / "x.hdr").write_text("samples = 3\n")
        with pytest.raises(SerializationError, match="ENVI"):
            io.read_cube_header(tmp_path / "x.hdr")

    def test_full_sensor_scale_header_parses(self, tmp_path):
        # header-only parse of a full-resolution 33-channel stacked product
        wavelengths = ", ".join(
            repr(float(v)) for v in presets.stacked_grid().centers
        )
        (tmp_path / "big.hdr").write_text(
            "ENVI\n"
            "samples = 1666\n"
            "lines = 1012\n"
            "bands = 33\n"
            "data type = 5\n"
            "interleave = bsq\n"
            "byte order = 0\n"
            f"wavelength = {{ {wavelengths} }}\n"
        )
        header = io.read_cube_header(tmp_path / "big.hdr")
        assert (header["lines"], header["samples"], header["bands"]) == (1012, 1666, 33)
        assert len(header["wavelength"]) == 33

    def test_multiline_wavelength_list(self, rng, tmp_path):
        cube = random_cube(rng, bands=3)
        hdr, _ = io.write_cube(cube, tmp_path / "cube")
        text = hdr.read_text()
        start = text.index("wavelength = {")
        end = text.index("}", start)
        wl_block = text[start:end].replace(", ", ",\n  ")
        hdr.write_text(text[:start] + wl_block + text[end:])
        back = io.read_cube(tmp_path / "cube.hdr")
        assert back.grid == cube.grid

    def test_bsq_layout_on_disk(self, rng, tmp_path):
        cube = random_cube(rng, h=2, w=2, bands=2)
        _, raw = io.write_cube(cube, tmp_path / "cube")
        flat = np.frombuffer(raw.read_bytes(), dtype="<f8")
        # band-sequential: all of band 0 first, row-major within a band
        expected = np.concatenate([cube.values[:, :, 0].ravel(), cube.values[:, :, 1].ravel()])
        assert np.array_equal(flat, expected)


class TestSpectrumIO:
    def test_round_trip_exact(self, rng, tmp_path):
        dev = presets.vnir_spectrometer()
        s = Spectrum(grid=dev.grid, values=rng.uniform(0, 4000, 256), integration_time=0.5)
        io.write_spectrum(s, tmp_path / "s.csv")
        back = io.read_spectrum(tmp_path / "s.csv")
        assert np.array_equal(back.values, s.values)
        assert back.grid == s.grid
        assert back.integration_time == 0.5

    def test_vnir_file_has_256_channels(self, rng, tmp_path):
        dev = presets.vnir_spectrometer()
        s = Spectrum(grid=dev.grid, values=rng.uniform(0, 4000, 256), integration_time=0.5)
        io.write_spectrum(s, tmp_path / "s.csv")
        assert len(io.read_spectrum(tmp_path / "s.csv").grid) == 256

    def test_empty_file_rejected(self, tmp_path):
        (tmp_path / "empty.csv").write_text("")
        with pytest.raises(SerializationError, match="no spectral rows"):
            io.read_spectrum(tmp_path / "empty.csv")

    def test_malformed_row_rejected(self, tmp_path):
        (tmp_path / "bad.csv").write_text("wavelength_nm,counts\n500.0,1.0,extra\n")
        with pytest.raises(SerializationError, match="expected"):
            io.read_spectrum(tmp_path / "bad.csv")

    def test_non_monotone_wavelengths_rejected(self, tmp_path):
        (tmp_path / "bad.csv").write_text("wavelength_nm,counts\n510.0,1.0\n500.0,2.0\n")
        with pytest.raises(SerializationError, match="increasing"):
            io.read_spectrum(tmp_path / "bad.csv")


class TestDeviceIO:
    def test_spectrometer_round_trip(self, tmp_path):
        dev = presets.vnir_spectrometer()
        io.write_device(dev, tmp_path / "spec.json")
        back = io.read_device(tmp_path / "spec.json")
        assert back.name == dev.name
        assert back.grid == dev.grid
        assert back.bit_saturation == dev.bit_saturation
        assert np.array_equal(back.dark_reference, dev.dark_reference)

    def test_camera_round_trip_with_dark_cube(self, tmp_path):
        dev = presets.vnir_camera(4, 4)
        io.write_device(dev, tmp_path / "cam.json")
        assert (tmp_path / "cam_dark.hdr").exists()
        back = io.read_device(tmp_path / "cam.json")
        assert back.dark_reference.shape == (4, 4, 24)
        assert np.array_equal(back.dark_reference, dev.dark_reference)

    def test_missing_field_rejected(self, tmp_path):
        (tmp_path / "dev.json").write_text("{\"name\": \"x\"}")
        with pytest.raises(SerializationError, match="missing device field"):
            io.read_device(tmp_path / "dev.json")


class TestMapExports:
    def test_csv_round_trip(self, rng, tmp_path):
        values = rng.normal(size=(5, 7))
        io.write_map_csv(values, tmp_path / "m.csv")
        assert np.array_equal(io.read_map_csv(tmp_path / "m.csv"), values)

    def test_png_fixed_value_mapping(self, tmp_path):
        values = np.array([[-1.0, 0.0], [1.0, 2.0]])
        io.write_map_png(values, tmp_path / "m.png", vmin=-1.0, vmax=1.0)
        img = np.asarray(Image.open(tmp_path / "m.png"))
        assert img.dtype == np.uint8
        assert img[0, 0] == 0
        assert img[0, 1] == 128
        assert img[1, 0] == 255
        assert img[1, 1] == 255  # clipped above vmax

    def test_png_rejects_bad_range(self, tmp_path):
        with pytest.raises(ValueError, match="vmax"):
            io.write_map_png(np.zeros((2, 2)), tmp_path / "m.png", vmin=1.0, vmax=1.0)
