# SPDX-License-Identifier: EUPL-1.2
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

from __future__ import annotations

import pytest

from parthash.core.keyvalue import format_key_value_text, parse_key_value_text
from parthash.exceptions import ConfigurationError


class TestParseKeyValueText:
    @pytest.mark.unit
    def test_comments_blank_lines_and_whitespace(self) -> None:
        text = "# header\n\n scheme = EQL4 \nlr=0.05\nexpr=a=b\nempty=\n"
        assert parse_key_value_text(text) == {"scheme": "EQL4", "lr": "0.05", "expr": "a=b", "empty": ""}

    @pytest.mark.unit
    @pytest.mark.parametrize(
        ("text", "message"),
        [("scheme EQL4\n", "expected 'key=value'"), ("=5\n", "expected 'key=value'"), ("a=1\na=2\n", "duplicate")],
        ids=["no-separator", "empty-key", "duplicate"],
    )
    def test_malformed_lines_name_the_line(self, text: str, message: str) -> None:
        with pytest.raises(ConfigurationError, match=message) as excinfo:
            parse_key_value_text(text, "run.txt")
        assert str(excinfo.value).startswith("run.txt:")


class TestFormatKeyValueText:
    @pytest.mark.unit
    def test_rendering(self) -> None:
        values = {"scheme": "EQL4", "share_weights": False, "dataset_dir": None, "lr": 0.05}
        assert format_key_value_text(values) == "scheme=EQL4\nshare_weights=false\nlr=0.05\n"

    @pytest.mark.unit
    def test_parse_reads_formatted_text(self) -> None:
        values = {"b": 2, "a": "x y", "flag": True}
        assert parse_key_value_text(format_key_value_text(values)) == {"b": "2", "a": "x y", "flag": "true"}
