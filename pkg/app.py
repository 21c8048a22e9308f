"""
Convolution Lab
Command-line launcher: python app.py <subcommand> [options]
"""

from dotenv import load_dotenv

# Load environment variables BEFORE importing app modules that read config
load_dotenv()

from app.cli import main  # noqa: E402


if __name__ == "__main__":
    main()
