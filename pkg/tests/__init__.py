# Tests package for nehari-bif
