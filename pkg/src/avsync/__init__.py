"""avsync: dubbed-take selection by mel-spectrogram time warping, linear
timecode session alignment, and a simulated audiovisual matrix sentence
test with adaptive 80% threshold tracking."""

__version__ = "0.1.0"

from .adaptive import AdaptiveConfig, AdaptiveTrack, Condition, estimate_srt, init_track, update_level, vo_score
from .align import AlignmentResult, WarpPath, align_pair, asynchrony_score, dtw, find_best_offset, warp_function
from .audio_io import AudioBuffer, delay, extract_channel, from_mono, load_wav, read_wav, save_wav, write_wav
from .errors import AvsyncError, DataError, MalformedFileError, UnsupportedFormatError
from .experiment import SimConfig, descriptive, pearson_r, run_experiment, simulate, summarize
from .listener import ListenerProfile, PopulationConfig, p_word, respond, sample_population
from .ltc import LtcFrame, PlaybackSchedule, Timecode, align_session, decode_ltc, encode_ltc
from .melspec import MelParams, MelSpectrogram, compute_mel_spectrogram, frame_count
from .mst import MatrixSentence, TestList, WordMatrix, default_word_matrix, generate_lists, score_response, word_percentage
from .selection import TakeCorpus, build_selection_report, load_manifest, scan_corpus, select_best, sensitivity_report
