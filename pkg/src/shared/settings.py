from pathlib import Path


class GlobalSettings():
    ##
    # Paths ---------
    APP_DIR = Path("./").resolve()

    # Output Directory
    OUTPUT_DIR = APP_DIR/"output"
    # Logging Related Paths
    LOGS_DIR = OUTPUT_DIR/"logs"
    GLOBAL_LOGS_DIR = LOGS_DIR/"global"
    # Solver Output Paths
    FIELDS_DIR = OUTPUT_DIR/"fields"
    # Configuration
    CONFIG_DIR = APP_DIR/"config"
    # Paths ---------
    ##

    class LoggingParams():
        BACKUP_COUNT = 10
        GLOBAL_FILE_NAME = "global.log"
        FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    class TransportSettings():
        # Wire protocol identification for the TCP handshake
        PROTOCOL_MAGIC = b"LFTX"
        PROTOCOL_VERSION = 1
        # Seconds allowed for connection setup; established links block forever
        HANDSHAKE_TIMEOUT = 30.0
        # Delay between coordinator connection attempts (seconds)
        CONNECT_RETRY_INTERVAL = 0.1
        # Frames larger than this are rejected as malformed (1 TiB)
        MAX_FRAME_BYTES = 1 << 40
        # Address tcp workers listen on and advertise to the other ranks
        LISTEN_HOST = "127.0.0.1"

    class FieldFileSettings():
        MAGIC = b"LFLD"
        VERSION = 1

    class LatticeLimits():
        MAX_NDIM = 10

    class SolverDefaults():
        DIMS = (10, 10, 10)
        ITERATIONS = 1000
        CHECKPOINT_EVERY = 100
        NRANKS = 1
        BACKEND = "inproc"
        SEED = 0
        OUTPUT_FILE_NAME = "field_phi.lfld"
        # Source amplitude A, row-major (re, im) pairs
        AMPLITUDE = ((1.0, 0.0), (0.0, 1.0), (3.0, 0.0), (1.0, 0.0))

    # Operations
    @classmethod
    def ensure_output_dirs(cls):
        cls.OUTPUT_DIR.mkdir(exist_ok=True, parents=True)
        cls.LOGS_DIR.mkdir(exist_ok=True, parents=True)
        cls.GLOBAL_LOGS_DIR.mkdir(exist_ok=True, parents=True)
        cls.FIELDS_DIR.mkdir(exist_ok=True, parents=True)
