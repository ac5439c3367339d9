# note 0 on the value
value_0 =                                        0
value_1 =                                        1
# note 1 on the value
value_2 =                                        2
value_3 =                                        3
# note 2 on the value
value_4 =                                        4
value_5 =                                        5
# note 3 on the value
value_6 =                                        6
value_7 =                                        7
# note 4 on the value
value_8 =                                        8
value_9 =                                        9
# note 5 on the value
value_10 =                                        10
value_11 =                                        11
# note 6 on the value
value_12 =                                        12
value_13 =                                        13
# note 7 on the value
value_14 =                                        14
value_15 =                                        15
# note 8 on the value
value_16 =                                        16
value_17 =                                        17
# note 9 on the value
value_18 =                                        18
value_19 =                                        19
