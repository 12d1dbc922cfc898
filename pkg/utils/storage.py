# ----------------------- utils/storage.py -----------------------
import os, json
from typing import Dict, Any

MANIFEST_FILE = "manifest.json"


def atomic_write_text(path: str, text: str) -> None:
    """Write via tmp file + os.replace so readers never see a half-written output."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    os.replace(tmp, path)


class Storage:
    """
    Run manifest of one output directory:
        {
          "runs": { "<run key>": { scenario, seed, policy, event_hash, status, ... } },
          "<free keys>": <any JSON value>
        }
    Everything is saved on every mutation; contents stay free of wall-clock data
    so identical runs leave identical manifests.
    """
    def __init__(self, path: str = MANIFEST_FILE):
        self.path = path
        self.data: Dict[str, Any] = {}
        self._load()

    def _load(self):
        if os.path.exists(self.path):
            try:
                with open(self.path, 'r', encoding='utf-8') as f:
                    self.data = json.load(f)
            except Exception:
                self.data = {}
        else:
            self.data = {}

    def save(self):
        atomic_write_text(self.path, json.dumps(self.data, ensure_ascii=False, indent=2, sort_keys=True))

    # ===================== TOP-LEVEL KV API =====================
    def set(self, key: str, value: Any) -> None:
        self.data[key] = value
        self.save()

    def get(self, key: str, default: Any = None) -> Any:
        return self.data.get(key, default)

    # ===================== RUN NAMESPACE API =====================
    def put_run(self, key: str, record: Dict[str, Any]) -> None:
        self.data.setdefault("runs", {})[key] = record
        self.save()

    def get_run(self, key: str) -> Dict[str, Any]:
        return (self.data.get("runs") or {}).get(key, {})
# ----------------------- /utils/storage.py -----------------------
