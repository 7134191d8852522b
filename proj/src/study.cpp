// placeholder; replaced by the real study implementation
