def first_square(limit):
    k = 0
    while k * k < limit:
        k += 1
    else:
        k = -k
    return k
