class Gamma {}
