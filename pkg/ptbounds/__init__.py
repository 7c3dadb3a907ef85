from dotenv import load_dotenv  # type: ignore
load_dotenv()

__all__ = []
