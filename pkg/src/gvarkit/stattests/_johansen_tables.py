"""Trace-test critical values (90%, 95%, 99%) indexed by n - r.

MacKinnon, Haug and Michelis (1999), "Numerical distribution functions of
likelihood ratio tests for cointegration", J. Applied Econometrics 14.
Rows are the number of common stochastic trends n - r = 1 .. 12.
"""

# no deterministic terms
TRACE_NONE = (
    (2.9762, 4.1296, 6.9406),  # 1
    (10.4741, 12.3212, 16.3640),  # 2
    (21.7781, 24.2761, 29.5147),  # 3
    (37.0339, 40.1749, 46.5716),  # 4
    (56.2839, 60.0627, 67.6367),  # 5
    (79.5329, 83.9383, 92.7136),  # 6
    (106.7351, 111.7797, 121.7375),  # 7
    (137.9954, 143.6691, 154.7977),  # 8
    (173.2292, 179.5199, 191.8122),  # 9
    (212.4721, 219.4051, 232.8291),  # 10
    (255.6732, 263.2603, 277.9962),  # 11
    (302.9054, 311.1288, 326.9716),  # 12
)

# unrestricted constant
TRACE_CONSTANT = (
    (2.7055, 3.8415, 6.6349),  # 1
    (13.4294, 15.4943, 19.9349),  # 2
    (27.0669, 29.7961, 35.4628),  # 3
    (44.4929, 47.8545, 54.6815),  # 4
    (65.8202, 69.8189, 77.8202),  # 5
    (91.1090, 95.7542, 104.9637),  # 6
    (120.3673, 125.6185, 135.9825),  # 7
    (153.6341, 159.5290, 171.0905),  # 8
    (190.8714, 197.3772, 210.0366),  # 9
    (232.1030, 239.2468, 253.2526),  # 10
    (277.3740, 285.1402, 300.2821),  # 11
    (326.5354, 334.9795, 351.2150),  # 12
)

# unrestricted constant and linear trend
TRACE_TREND = (
    (2.7055, 3.8415, 6.6349),  # 1
    (16.1619, 18.3985, 23.1485),  # 2
    (32.0645, 35.0116, 41.0815),  # 3
    (51.6492, 55.2459, 62.5202),  # 4
    (75.1027, 79.3422, 87.7748),  # 5
    (102.4674, 107.3429, 116.9829),  # 6
    (133.7852, 139.2780, 150.0778),  # 7
    (169.0618, 175.1584, 187.1891),  # 8
    (208.3582, 215.1268, 228.2226),  # 9
    (251.6293, 259.0267, 273.3838),  # 10
    (298.8836, 306.8988, 322.4264),  # 11
    (350.1125, 358.7190, 375.3203),  # 12
)
