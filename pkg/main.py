# main.py
import sys

from dotenv import load_dotenv

load_dotenv()  # this reads .env and sets the HYPSPIKE_* defaults

from app.routers import CommandLineApp  # noqa: E402
from app.routers import density, evaluate  # noqa: E402

app = CommandLineApp(
    prog="hypspike",
    description="Rank-one spiked hypergeometric functions of two matrix arguments",
)

app.include_router(evaluate.router)
app.include_router(density.router)


def main(argv=None, out=None) -> int:
    return app.run(argv, out)


if __name__ == "__main__":
    sys.exit(main())
