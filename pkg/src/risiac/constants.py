SPEED_OF_LIGHT = 299_792_458.0  # m/s
DEFAULT_CARRIER = 60e9  # Hz
