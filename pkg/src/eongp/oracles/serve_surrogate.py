"""Serve a saved surrogate model over the plugin protocol.

    python -m eongp.oracles.serve_surrogate model.json
"""

import sys

from .plugin import serve
from .surrogate import SurrogateModel


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m eongp.oracles.serve_surrogate MODEL.json", file=sys.stderr)
        return 2
    model = SurrogateModel.load(argv[0])
    serve(classify=lambda clip: model.classify(clip).as_dict())
    return 0


if __name__ == "__main__":
    sys.exit(main())
