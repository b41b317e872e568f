import hashlib
import os


def ensure_directory(path: str) -> None:
	os.makedirs(path, exist_ok=True)


def dataset_checksum(path: str, block_size: int = 1 << 20) -> str:
	"""sha256 of a data file, for report provenance."""
	digest = hashlib.sha256()
	with open(path, 'rb') as f:
		for block in iter(lambda: f.read(block_size), b''):
			digest.update(block)
	return digest.hexdigest()
