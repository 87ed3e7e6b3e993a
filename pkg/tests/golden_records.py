"""Fixed summaries whose encodings are pinned by the files in tests/golden.

Run this module to rewrite the golden files after a deliberate layout change.
"""

from pathlib import Path

from superflow.flows import ip_to_int
from superflow.footprint import encode_allotted_scan256, encode_scan256, encode_web_superflow
from superflow.summaries import ScanSummary, SiteEntry, WebSummary

GOLDEN = Path(__file__).parent / "golden"
T0 = 1_700_000_000_000


def full_scan():
    return ScanSummary(ip_to_int("203.0.113.7"), ip_to_int("192.168.1.0"), (1 << 256) - 1,
                       T0 + 12, T0 + 9_876, 256 * 44, 256, 0x02, True)


def allotted_scan():
    bitmap = sum(1 << a for a in range(256) if a % 8 != 3)   # 224 addresses, .3/.11/... skipped
    return ScanSummary(ip_to_int("203.0.113.7"), ip_to_int("192.168.1.0"), bitmap,
                       T0, T0 + 9_000, 224 * 40, 224, 0x02, True)


def web_page():
    entries = (
        SiteEntry(ip_to_int("198.18.0.1"), 3, 7, 120_000, 150, 0),
        SiteEntry(ip_to_int("198.18.0.2"), 4, 2, 5_000, 12, 1),
        SiteEntry(ip_to_int("198.18.3.9"), 1, 1, 80, 1, 4),
    )
    return WebSummary(ip_to_int("10.1.2.3"), T0, T0 + 4_500, entries)


RECORDS = {
    "scan256.bin": lambda: encode_scan256(full_scan()),
    "allotted_scan256.bin": lambda: encode_allotted_scan256(allotted_scan()),
    "web3.bin": lambda: encode_web_superflow(web_page()),
}


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    for name, build in RECORDS.items():
        (GOLDEN / name).write_bytes(build())
        print(name, len(build()))
