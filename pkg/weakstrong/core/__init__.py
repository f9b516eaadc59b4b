"""Core measurement models: closed-form, Fock-space and tomographic readout."""
