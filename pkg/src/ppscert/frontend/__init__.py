from .pps_format import parse_pps, serialize_pps
from .ppl import parse_program
from .translate import translate, TranslateConfig

__all__ = ["parse_pps", "serialize_pps", "parse_program", "translate", "TranslateConfig"]
