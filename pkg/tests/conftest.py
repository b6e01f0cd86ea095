import json

import pytest
from hypothesis import settings

settings.register_profile("nmskit", deadline=None)
settings.load_profile("nmskit")


THREE_BOX_RECORDS = [
    {"image_id": 0, "category_id": 0, "bbox": [0.0, 0.0, 10.0, 10.0], "score": 0.9},
    {"image_id": 0, "category_id": 0, "bbox": [0.0, 2.5, 10.0, 10.0], "score": 0.8},
    {"image_id": 0, "category_id": 0, "bbox": [100.0, 100.0, 10.0, 10.0], "score": 0.7},
]


@pytest.fixture
def three_box_file(tmp_path):
    """Detection file for the hand-worked fixture: d2 overlaps d1 at IoU 0.6."""
    path = tmp_path / "three_box.json"
    path.write_text(json.dumps(THREE_BOX_RECORDS), encoding="utf-8")
    return path
