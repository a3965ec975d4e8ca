"""Obfuscation transforms and the containers they produce."""
from .container import (BASE64, CIPHER_EMBEDDED, CIPHER_KINDS, DENIABLE_DUAL,
                        DENIABLE_XOR, ENV_KINDS, HTD_ENV_EBOWLA, HTD_ENV_FIXED,
                        HTD_RANDOM, KINDS, XOR1, Branch, Container, Digest,
                        MalformedContainerError, Schedule)
from .sealing import EBOWLA, FIXED, DeniablePair, deniable_pair
from .transforms import (OBFUSCATORS, Base64Obfuscator, BaseObfuscator,
                         CipherEmbeddedObfuscator, DeniableDualObfuscator,
                         DeniableXorObfuscator, HtdEnvObfuscator,
                         HtdRandomObfuscator, IdentityObfuscator, Xor1Obfuscator,
                         benign_cover, obf_base64, obf_cipher_embedded,
                         obf_deniable_dual, obf_deniable_xor, obf_htd_env,
                         obf_htd_random, obf_identity, obf_xor1, sealable_ranges)

__all__ = [name for name in dir() if not name.startswith("_")]
