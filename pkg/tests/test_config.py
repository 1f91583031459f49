import json

import pytest

from jchsim.config import apply_overrides, load_config, load_document, resolve_device, validate
from jchsim.errors import ConfigError
from jchsim.units import parse_frequency


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_yaml_and_json_documents_agree(tmp_path):
    doc = {"device": {"preset": "typical_device", "photon_cutoff": 1}}
    a = load_config(_write(tmp_path, "a.json", json.dumps(doc)))
    b = load_config(_write(tmp_path, "b.yaml", "device:\n  preset: typical_device\n  photon_cutoff: 1\n"))
    assert a == b


def test_missing_file_and_parse_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_document(tmp_path / "absent.yaml")
    with pytest.raises(ConfigError, match="parse error"):
        load_document(_write(tmp_path, "bad.yaml", "device: [unclosed\n"))
    with pytest.raises(ConfigError, match="mapping"):
        load_document(_write(tmp_path, "list.yaml", "- 1\n- 2\n"))


def test_empty_document_is_valid(tmp_path):
    assert load_config(_write(tmp_path, "empty.yaml", ""))["schema_version"] == 1
    assert load_config(None)["schema_version"] == 1


def test_validation_reports_field_and_line(tmp_path):
    text = "device:\n  preset: typical_device\n  photon_cutoff: many\n"
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, "c.yaml", text))
    assert "device.photon_cutoff (line 3)" in str(exc.value)


def test_unknown_field_rejected():
    with pytest.raises(ConfigError, match="device"):
        validate({"device": {"preset": "typical_device", "colour": "blue"}})


def test_overrides():
    doc = apply_overrides({}, ["device.preset=typical_device", "device.photon_cutoff=2"])
    assert doc == {"device": {"preset": "typical_device", "photon_cutoff": 2}}
    swept = apply_overrides({}, ["sweep.parameters.g_over_delta=[0.1, 0.2]"])
    assert swept["sweep"]["parameters"]["g_over_delta"] == [0.1, 0.2]
    with pytest.raises(ConfigError, match="key=value"):
        apply_overrides({}, ["device.preset"])
    with pytest.raises(ConfigError, match="not a configuration field"):
        apply_overrides({}, ["device.flavour=3"])
    with pytest.raises(ConfigError, match="cannot parse"):
        apply_overrides({}, ["device.photon_cutoff=[1"])


def test_override_into_preset_list_out_of_range():
    with pytest.raises(ConfigError, match="out of range"):
        apply_overrides({"device": {"preset": "typical_device"}}, ["device.drives.1.frequency=3000"])


def test_override_does_not_mutate_input():
    doc = {"device": {"photon_cutoff": 1}}
    apply_overrides(doc, ["device.photon_cutoff=3"])
    assert doc == {"device": {"photon_cutoff": 1}}


def test_resolve_preset_device():
    dev = resolve_device({"preset": "typical_device"})
    assert dev.lattice.num_sites == 2
    assert dev.site.couplings[0][0] == 100
    assert dev.coupling.hoppings == (30.0, 30.0)
    assert len(dev.drives) == 4
    assert dev.metadata["preset"] == "typical_device"


def test_resolve_explicit_device_with_units():
    dev = resolve_device({
        "site": {"qubit_freqs": ["3 GHz", "7 GHz"], "mode_freqs": [4000, 8000],
                 "couplings": [["100 MHz", 0], [0, "0.1 GHz"]], "qubit_labels": ["down", "up"]},
        "coupling": {"hoppings": "30 MHz"},
    })
    assert dev.site.qubit_freqs == (3000.0, 7000.0)
    assert dev.site.couplings[1][1] == pytest.approx(100.0)
    assert dev.coupling.hoppings == (30.0,)


def test_resolve_device_errors():
    with pytest.raises(ConfigError, match="no device"):
        resolve_device(None)
    with pytest.raises(ConfigError, match="site is required"):
        resolve_device({"coupling": {"hoppings": [30]}})
    with pytest.raises(ConfigError, match="outside a lattice"):
        resolve_device({"preset": "typical_device",
                        "drives": [{"site": 5, "spin": "down", "mode": 1, "amplitude": 1, "frequency": 1}]})
    with pytest.raises(ConfigError, match="mode"):
        resolve_device({"preset": "typical_device",
                        "drives": [{"site": 0, "spin": "down", "mode": 9, "amplitude": 1, "frequency": 1}]})


@pytest.mark.parametrize("text,mhz", [("4 GHz", 4000.0), ("250 kHz", 0.25), ("30MHz", 30.0), ("12", 12.0),
                                      (7, 7.0), (2.5, 2.5)])
def test_parse_frequency(text, mhz):
    assert parse_frequency(text) == pytest.approx(mhz)


@pytest.mark.parametrize("bad", ["fast", "4 parsecs", True, None])
def test_parse_frequency_rejects(bad):
    with pytest.raises(ConfigError):
        parse_frequency(bad)
