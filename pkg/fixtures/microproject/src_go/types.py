"""Source-side native types of the subject project."""


class KeySeed:
    def __init__(self, seed):
        self.seed = bytes(seed)


class Digest32:
    def __init__(self, data):
        self.data = bytes(data)
