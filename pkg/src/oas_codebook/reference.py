"""Published MSE curves (dB) for OAS with a Gaussian codebook.

Common setting: N = 200, rho = 0.1, sigma2 = 0.01. The LASSO and MMSE levels
are large-system asymptotics, not simulations; they are shipped as
constants so sweeps can be overlaid on them. Every entry is tagged
``source = "published"``.
"""

SOURCE = "published"
SETTING = {"N": 200, "rho": 0.1, "sigma2": 0.01}

# one-shot benchmarks, keyed by compression rate R = N / K
LASSO_DB = {
    1: -23.7988424961844,
    2: -21.7087863143831,
    4: -15.2756881199302,
    5: -13.2684000962942,
}
MMSE_DB = {
    1: -26.7090331369231,
    2: -25.4574314892307,
    4: -19.4385388842104,
    5: -14.1837317839488,
}

# MSE vs L, random selection, M = 80, S = 1000
MSE_VS_L = {
    1: {10: -16.1620415725284, 31: -20.6189391059571, 52: -22.5923816066717,
        73: -23.1568445670804, 94: -23.1575216819078, 115: -22.6629958478077,
        136: -21.4823683920346, 157: -20.051049524429, 178: -16.851122113676,
        200: -10.0830266732769},
    2: {10: -15.8736113776941, 20: -18.0424106202111, 30: -19.4248801790832,
        40: -20.3486392383628, 50: -20.4732877835404, 60: -20.2917631073408,
        70: -19.2027159335496, 80: -17.7012595749485, 90: -14.9816095570254,
        100: -10.121953790808},
    4: {10: -14.4803968823365, 14: -15.668516167458, 18: -16.2238785767465,
        23: -16.6736306873151, 27: -16.8019157731149, 32: -16.7113100299524,
        36: -15.7995116891045, 41: -14.2864405384455, 45: -12.5452033894275,
        50: -10.005328458206},
    5: {10: -14.2705227085893, 13: -14.7269245936189, 16: -15.4427483931612,
        20: -15.389294537565, 23: -15.4708642817175, 26: -15.4290223202941,
        30: -14.410390168543, 33: -13.6105786328416, 36: -11.7685903113014,
        40: -9.98811317087531},
}

# MSE vs codebook size S; R = 4, M = 60, L = 25
MSE_VS_S = {
    50: -8.50108735117111, 100: -12.3846970263169, 150: -14.0116526807055,
    200: -14.8370003367178, 300: -15.6790331303782, 400: -15.9834453979235,
    500: -16.2070003948969, 600: -16.4345105849813, 700: -16.4010391524912,
    800: -16.2493192059775, 900: -16.3804851212842, 1000: -16.3729002352152,
}

# MSE vs subframe count M; R = 4, L = 25, keyed by S
MSE_VS_M = {
    500: {20: -7.77659290398459, 30: -13.9650320902179, 40: -15.200826654788,
          50: -15.9526552468812, 60: -16.257504368707, 70: -16.2604244252569,
          80: -16.421890876287, 90: -16.4623940669881, 100: -16.5618057704167,
          110: -16.7166227842952, 120: -16.6041729817019},
    1000: {20: -5.73047505749962, 30: -13.8772817614586, 40: -15.389083351332,
           50: -16.1452268864302, 60: -16.7612039661784, 70: -16.6899535436441,
           80: -16.5272581019743, 90: -16.9672307178716, 100: -16.8187645685541,
           110: -16.7489341099981, 120: -16.9722718628723},
}

# MSE vs L by selection strategy; R = 4, S = 500, M = 20
MSE_VS_L_BY_STRATEGY = {
    "random": {10: -3.50236821332384, 20: -4.93947531947828, 30: -7.28465771542162,
               40: -8.78683430032598, 50: -9.71003990613216},
    "stepwise": {10: -7.35231517008054, 20: -12.7242787255542, 30: -13.7813107482051,
                 40: -11.7281622260895, 50: -9.90123120493391},
}


def benchmark_db(method: str, N: int, K: int, rho: float, sigma2: float):
    """Published LASSO/MMSE level for this setting, or None when there is none."""
    table = {"lasso": LASSO_DB, "mmse": MMSE_DB}[method]
    if (N, rho, sigma2) != (SETTING["N"], SETTING["rho"], SETTING["sigma2"]) or N % K:
        return None
    return table.get(N // K)
